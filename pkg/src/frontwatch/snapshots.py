"""State snapshot files: magic "CFS1", ASCII header, raw float64 payload.

Layout:

    CFS1
    model <kind>
    n1 <int>
    n2 <int>
    t <float, 17 significant digits>
    fields <name> [<name> ...]
    psi <expression>        (passive model only)
    end
    <little-endian float64, row-major (x1 index first), per field in order>

The format is byte-exact: writing the same state twice produces identical
files.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np

from .expressions import compile_psi
from .grid import GridSpec, RealField
from .models import HyperdissipationParams, ModelKind, ModelState

MAGIC = "CFS1"


def write_snapshot(path, state: ModelState) -> None:
    path = Path(path)
    names = list(state.kind.prognostics)
    lines = [
        MAGIC,
        f"model {state.kind.value}",
        f"n1 {state.grid.n1}",
        f"n2 {state.grid.n2}",
        f"t {state.t:.17g}",
        "fields " + " ".join(names),
    ]
    if state.kind is ModelKind.PASSIVE:
        if not state.psi_source:
            raise ValueError(
                "passive states need psi_source (the formula text) to be "
                "written to a snapshot"
            )
        lines.append(f"psi {state.psi_source}")
    lines.append("end")
    with open(path, "wb") as fh:
        fh.write(("\n".join(lines) + "\n").encode("ascii"))
        for name in names:
            fh.write(getattr(state, name).values.astype("<f8").tobytes(order="C"))


def read_snapshot(path, hyper: HyperdissipationParams | None = None) -> ModelState:
    path = Path(path)
    with open(path, "rb") as fh:
        header: dict[str, str] = {}
        first = fh.readline().decode("ascii", errors="replace").rstrip("\n")
        if first != MAGIC:
            raise ValueError(f"{path}: bad magic {first!r}, expected {MAGIC!r}")
        while True:
            raw = fh.readline()
            if not raw:
                raise ValueError(f"{path}: truncated header (no 'end' line)")
            line = raw.decode("ascii", errors="replace").rstrip("\n")
            if line == "end":
                break
            key, _, value = line.partition(" ")
            if not value:
                raise ValueError(f"{path}: malformed header line {line!r}")
            header[key] = value
        for key in ("model", "n1", "n2", "t", "fields"):
            if key not in header:
                raise ValueError(f"{path}: header missing {key!r}")
        kind = ModelKind(header["model"])
        grid = GridSpec(int(header["n1"]), int(header["n2"]))
        t = float(header["t"])
        names = header["fields"].split()
        if tuple(names) != kind.prognostics:
            raise ValueError(
                f"{path}: fields {names} do not match model "
                f"{kind.value} prognostics {list(kind.prognostics)}"
            )
        payload = fh.read()

    count = grid.n1 * grid.n2
    expected = 8 * count * len(names)
    if len(payload) != expected:
        raise ValueError(
            f"{path}: payload is {len(payload)} bytes, expected {expected}"
        )
    fields = {}
    buf = io.BytesIO(payload)
    for name in names:
        arr = np.frombuffer(buf.read(8 * count), dtype="<f8").reshape(grid.shape)
        fields[name] = RealField(grid, arr.copy())

    psi_fn = psi_source = None
    if kind is ModelKind.PASSIVE:
        psi_source = header.get("psi")
        if psi_source is None:
            raise ValueError(f"{path}: passive snapshot lacks the psi header line")
        psi_fn = compile_psi(psi_source)

    return ModelState(
        kind=kind,
        grid=grid,
        t=t,
        psi_fn=psi_fn,
        psi_source=psi_source,
        hyper=hyper if hyper is not None else HyperdissipationParams(),
        **fields,
    )
