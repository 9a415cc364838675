"""Compile stream-function formulas like "sin(x1)*sin(x2)*cos(t)".

Expressions see x1, x2 (arrays), t (float) and a whitelist of numpy
functions and constants; nothing else, and no builtins.
"""

from __future__ import annotations

import numpy as np

_NAMESPACE = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "sinh": np.sinh,
    "cosh": np.cosh,
    "tanh": np.tanh,
    "pi": np.pi,
    "e": np.e,
}


def compile_psi(source: str):
    """Return psi(x1, x2, t) evaluating the expression; validates by a test call."""
    try:
        code = compile(source, "<psi>", "eval")
    except SyntaxError as exc:
        raise ValueError(f"bad psi expression {source!r}: {exc.msg}") from None
    for name in code.co_names:
        if name not in _NAMESPACE and name not in ("x1", "x2", "t"):
            raise ValueError(
                f"psi expression uses unknown name {name!r}; allowed: x1, x2, t, "
                + ", ".join(sorted(_NAMESPACE))
            )

    def psi_fn(x1, x2, t):
        env = dict(_NAMESPACE)
        env.update({"x1": x1, "x2": x2, "t": t})
        return eval(code, {"__builtins__": {}}, env)  # noqa: S307 - whitelisted names only

    probe = np.linspace(0.0, 1.0, 4).reshape(2, 2)
    try:
        out = np.asarray(psi_fn(probe, probe, 0.0), dtype=np.float64)
        np.broadcast_to(out, probe.shape)
    except Exception as exc:
        raise ValueError(f"psi expression {source!r} failed to evaluate: {exc}") from None
    return psi_fn
