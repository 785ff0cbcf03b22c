"""Plain-text serialization for models, trajectories, and estimates.

Every float is written as ``%.17g`` so round-tripping through disk is
bit-exact for doubles; the formats are deliberately trivial (labelled matrix
blocks, plain CSV) so they can be inspected and diffed by hand.
"""

from __future__ import annotations

import numpy as np

from .errors import ModelFormatError
from .lti import LtiSystem, Trajectory, make_system

__all__ = [
    "write_model",
    "read_model",
    "write_trajectory",
    "read_trajectory",
    "write_estimate",
    "format_matrix_blocks",
    "parse_matrix_blocks",
]

_FMT = "%.17g"


def _fmt(x: float) -> str:
    return _FMT % x


def format_matrix_blocks(blocks: list[tuple[str, np.ndarray]]) -> str:
    """Render named matrices as ``# block: <name> <rows> <cols>`` sections."""
    lines: list[str] = []
    for name, mat in blocks:
        mat = np.atleast_2d(np.asarray(mat, dtype=float))
        lines.append(f"# block: {name} {mat.shape[0]} {mat.shape[1]}")
        if mat.shape[1] == 0:
            continue  # shape is fully determined by the header
        for row in mat:
            lines.append(" ".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def parse_matrix_blocks(text: str, source: str = "<model>") -> dict[str, np.ndarray]:
    """Inverse of :func:`format_matrix_blocks`, with positioned errors."""
    blocks: dict[str, np.ndarray] = {}
    name = None
    rows: list[list[float]] = []
    want_rows = want_cols = 0

    def close(lineno: int) -> None:
        if name is None:
            return
        if len(rows) != want_rows:
            raise ModelFormatError(
                f"{source}:{lineno}: block {name!r} declares {want_rows} rows "
                f"but has {len(rows)}"
            )
        blocks[name] = np.array(rows, dtype=float).reshape(want_rows, want_cols)

    last_lineno = 0
    for lineno, line in enumerate(text.splitlines(), 1):
        last_lineno = lineno
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            body = stripped.lstrip("#").strip()
            if not body.startswith("block:"):
                continue  # ordinary comment
            close(lineno)
            parts = body[len("block:"):].split()
            if len(parts) != 3:
                raise ModelFormatError(
                    f"{source}:{lineno}: malformed block header {stripped!r}"
                )
            name = parts[0]
            if name in blocks:
                raise ModelFormatError(
                    f"{source}:{lineno}: duplicate block {name!r}"
                )
            try:
                want_rows, want_cols = int(parts[1]), int(parts[2])
            except ValueError as exc:
                raise ModelFormatError(
                    f"{source}:{lineno}: non-integer block shape in {stripped!r}"
                ) from exc
            if want_rows < 0 or want_cols < 0:
                raise ModelFormatError(
                    f"{source}:{lineno}: negative block shape in {stripped!r}"
                )
            rows = []
            if want_cols == 0:
                # no data lines follow; the header fixes the (n, 0) shape
                blocks[name] = np.empty((want_rows, 0))
                name = None
            continue
        if name is None:
            raise ModelFormatError(
                f"{source}:{lineno}: data before any block header"
            )
        try:
            values = [float(tok) for tok in stripped.split()]
        except ValueError as exc:
            raise ModelFormatError(
                f"{source}:{lineno}: non-numeric entry in block {name!r}"
            ) from exc
        if len(values) != want_cols:
            raise ModelFormatError(
                f"{source}:{lineno}: block {name!r} expects {want_cols} columns, "
                f"row has {len(values)}"
            )
        rows.append(values)
    close(last_lineno + 1)
    if not blocks:
        raise ModelFormatError(f"{source}: no matrix blocks found")
    return blocks


def write_model(path, system: LtiSystem) -> None:
    """Write A, B (possibly zero-column), and H blocks."""
    text = format_matrix_blocks(
        [("A", system.A), ("B", system.B), ("H", system.H)]
    )
    with open(path, "w") as fh:
        fh.write(text)


def read_model(path) -> LtiSystem:
    """Load a model file and re-validate it through :func:`make_system`.

    ``A`` and ``H`` blocks are required; ``B`` defaults to no inputs.
    """
    with open(path, "r") as fh:
        blocks = parse_matrix_blocks(fh.read(), source=str(path))
    for required in ("A", "H"):
        if required not in blocks:
            raise ModelFormatError(f"{path}: missing block {required!r}")
    unknown = set(blocks) - {"A", "B", "H"}
    if unknown:
        raise ModelFormatError(f"{path}: unexpected blocks {sorted(unknown)}")
    B = blocks.get("B")
    if B is not None and B.shape[1] == 0:
        B = None
    return make_system(blocks["A"], B=B, H=blocks["H"])


def write_trajectory(path, traj: Trajectory) -> None:
    """CSV with header ``t,x1..xn,u1..up``; at ``t = N`` the inputs are blank."""
    n = traj.states.shape[1]
    p = traj.inputs.shape[1]
    header = ",".join(
        ["t"]
        + [f"x{i}" for i in range(1, n + 1)]
        + [f"u{j}" for j in range(1, p + 1)]
    )
    lines = [header]
    for t in range(traj.n_steps + 1):
        cells = [str(t)] + [_fmt(v) for v in traj.states[t]]
        if t < traj.n_steps:
            cells += [_fmt(v) for v in traj.inputs[t]]
        else:
            cells += [""] * p
        lines.append(",".join(cells))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def read_trajectory(path) -> Trajectory:
    with open(path, "r") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines:
        raise ModelFormatError(f"{path}: empty trajectory file")
    header = lines[0].split(",")
    n = sum(1 for c in header if c.startswith("x"))
    p = sum(1 for c in header if c.startswith("u"))
    if header[0] != "t" or len(header) != 1 + n + p or n == 0:
        raise ModelFormatError(f"{path}:1: malformed trajectory header")
    n_steps = len(lines) - 2
    if n_steps < 0:
        raise ModelFormatError(f"{path}: trajectory has no state rows")
    states = np.empty((n_steps + 1, n))
    inputs = np.empty((n_steps, p))
    for t, line in enumerate(lines[1:]):
        cells = line.split(",")
        if len(cells) != len(header):
            raise ModelFormatError(
                f"{path}:{t + 2}: expected {len(header)} cells, got {len(cells)}"
            )
        try:
            if int(cells[0]) != t:
                raise ModelFormatError(
                    f"{path}:{t + 2}: time index {cells[0]} out of order"
                )
            states[t] = [float(c) for c in cells[1 : 1 + n]]
            if t < n_steps:
                inputs[t] = [float(c) for c in cells[1 + n :]]
            elif any(c.strip() for c in cells[1 + n :]):
                raise ModelFormatError(
                    f"{path}:{t + 2}: final row must leave inputs blank"
                )
        except ValueError as exc:
            raise ModelFormatError(
                f"{path}:{t + 2}: non-numeric cell: {exc}"
            ) from exc
    states.setflags(write=False)
    inputs.setflags(write=False)
    return Trajectory(states=states, inputs=inputs, seed=None, n_steps=n_steps)


def write_estimate(path, A_hat: np.ndarray, B_hat: np.ndarray) -> None:
    """Write the identified ``A_hat``/``B_hat`` pair as matrix blocks."""
    text = format_matrix_blocks([("A_hat", A_hat), ("B_hat", B_hat)])
    with open(path, "w") as fh:
        fh.write(text)
