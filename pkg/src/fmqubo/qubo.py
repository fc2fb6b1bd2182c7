"""Fixed-user QUBO reduction of a trained FM and the QUBO -> Ising map.

Both problem types keep a constant ``offset`` so that absolute energies stay
comparable with ratings: for the reduced problem of user ``u0``,
``qubo_energy(q, m) + q.offset == -predict(model, (u0 | m))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fm import FMModel


def _fold(quadratic, n: int):
    """Split a square matrix into (diagonal, strictly upper triangle with lower folded in)."""
    Q = np.array(quadratic, dtype=np.float64, copy=True)
    if Q.shape != (n, n):
        raise ValueError(f"quadratic must be ({n}, {n}), got {Q.shape}")
    upper = np.triu(Q, 1) + np.tril(Q, -1).T
    return np.diag(Q).copy(), upper


def _freeze(*arrays):
    for a in arrays:
        a.flags.writeable = False


@dataclass(frozen=True)
class QuboProblem:
    """minimize sum_i linear[i] x_i + sum_{i<j} quadratic[i, j] x_i x_j over x in {0,1}^n.

    A full square ``quadratic`` is accepted: entries below the diagonal are
    folded onto their mirror and diagonal entries into ``linear`` (x_i**2 == x_i).
    """

    linear: np.ndarray = field(repr=False)
    quadratic: np.ndarray = field(repr=False)
    offset: float = 0.0

    def __post_init__(self):
        lin = np.array(self.linear, dtype=np.float64, copy=True)
        if lin.ndim != 1:
            raise ValueError("linear must be a vector")
        diag, upper = _fold(self.quadratic, len(lin))
        lin += diag
        if not (np.isfinite(lin).all() and np.isfinite(upper).all() and np.isfinite(self.offset)):
            raise ValueError("QUBO coefficients must be finite")
        _freeze(lin, upper)
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "quadratic", upper)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def n(self) -> int:
        return len(self.linear)


@dataclass(frozen=True)
class IsingProblem:
    """minimize sum_i h[i] s_i + sum_{i<j} J[i, j] s_i s_j over s in {-1,+1}^n.

    Diagonal entries of a square ``J`` go to ``offset`` (s_i**2 == 1).
    """

    h: np.ndarray = field(repr=False)
    J: np.ndarray = field(repr=False)
    offset: float = 0.0

    def __post_init__(self):
        h = np.array(self.h, dtype=np.float64, copy=True)
        if h.ndim != 1:
            raise ValueError("h must be a vector")
        diag, upper = _fold(self.J, len(h))
        offset = float(self.offset) + float(diag.sum())
        if not (np.isfinite(h).all() and np.isfinite(upper).all() and np.isfinite(offset)):
            raise ValueError("Ising coefficients must be finite")
        _freeze(h, upper)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "J", upper)
        object.__setattr__(self, "offset", offset)

    @property
    def n(self) -> int:
        return len(self.h)

    def max_abs_coefficient(self) -> float:
        return float(max(np.abs(self.h).max(initial=0.0), np.abs(self.J).max(initial=0.0)))


def reduce_for_user(model: FMModel, u0) -> QuboProblem:
    """Negated FM restricted to user ``u0``, as an n_m-variable QUBO."""
    u0 = np.asarray(u0)
    if u0.shape != (model.n_u,):
        raise ValueError(f"user vector length {u0.shape} does not match n_u={model.n_u}")
    if not np.isin(u0, (0, 1)).all():
        raise ValueError("user vector must be binary")
    u = u0.astype(np.float64)
    nu = model.n_u
    Vu, Vm = model.V[:, :nu], model.V[:, nu:]
    wu, wm = model.w[:nu], model.w[nu:]

    user_latent = Vu @ u
    linear = -(wm + user_latent @ Vm)
    quadratic = -np.triu(Vm.T @ Vm, 1)
    user_pairs = 0.5 * (float(user_latent @ user_latent) - float(np.sum((Vu * Vu) @ (u * u))))
    offset = -(model.w0 + float(wu @ u) + user_pairs)
    return QuboProblem(linear, quadratic, offset)


def qubo_to_ising(q: QuboProblem) -> IsingProblem:
    """Substitute x = (s + 1) / 2; the returned offset already includes ``q.offset``."""
    W = q.quadratic
    coupling_sums = W.sum(axis=0) + W.sum(axis=1)
    h = q.linear / 2.0 + coupling_sums / 4.0
    J = W / 4.0
    offset = q.offset + q.linear.sum() / 2.0 + W.sum() / 4.0
    return IsingProblem(h, J, offset)


def _check_state(x, n: int, allowed, kind: str) -> np.ndarray:
    x = np.asarray(x)
    if x.shape[-1:] != (n,):
        raise ValueError(f"state length {x.shape[-1:]} does not match problem size {n}")
    if not np.isin(x, allowed).all():
        raise ValueError(f"state entries must be {kind}")
    return x.astype(np.float64)


def qubo_energy(q: QuboProblem, x) -> float | np.ndarray:
    """Objective without offset; ``x`` may be one state or a matrix of states."""
    x = _check_state(x, q.n, (0, 1), "binary")
    return x @ q.linear + np.einsum("...i,ij,...j->...", x, q.quadratic, x)


def ising_energy(p: IsingProblem, s) -> float | np.ndarray:
    """Hamiltonian without offset; ``s`` may be one state or a matrix of states."""
    s = _check_state(s, p.n, (-1, 1), "spins (+1/-1)")
    return s @ p.h + np.einsum("...i,ij,...j->...", s, p.J, s)


def _write_terms(path, offset, linear, quadratic):
    lines = [f"# offset {float(offset)!r}"]
    n = len(linear)
    for i in range(n):
        lines.append(f"{i} {i} {float(linear[i])!r}")
    for i in range(n):
        for j in range(i + 1, n):
            if quadratic[i, j] != 0.0:
                lines.append(f"{i} {j} {float(quadratic[i, j])!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _read_terms(path):
    offset = None
    linear: dict[int, float] = {}
    quad: dict[tuple[int, int], float] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if len(parts) == 2 and parts[0] == "offset":
                    offset = float(parts[1])
                continue
            try:
                i_s, j_s, v_s = line.split()
                i, j, v = int(i_s), int(j_s), float(v_s)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: malformed term line {line!r}") from None
            if i == j:
                linear[i] = v
            elif i < j:
                quad[(i, j)] = v
            else:
                raise ValueError(f"{path}:{lineno}: quadratic terms need i < j")
    if offset is None:
        raise ValueError(f"{path}: missing '# offset' header")
    n = 1 + max([*linear, *(j for _, j in quad)], default=-1)
    lin = np.zeros(n)
    Q = np.zeros((n, n))
    for i, v in linear.items():
        lin[i] = v
    for (i, j), v in quad.items():
        Q[i, j] = v
    return offset, lin, Q


def write_qubo(q: QuboProblem, path) -> None:
    """Text export: ``# offset <v>`` then ``i i <linear>`` and ``i j <quadratic>`` lines.

    Values use Python's shortest round-trip repr, so a read back is bit-exact.
    """
    _write_terms(path, q.offset, q.linear, q.quadratic)


def read_qubo(path) -> QuboProblem:
    offset, lin, Q = _read_terms(path)
    return QuboProblem(lin, Q, offset)


def write_ising(p: IsingProblem, path) -> None:
    _write_terms(path, p.offset, p.h, p.J)


def read_ising(path) -> IsingProblem:
    offset, h, J = _read_terms(path)
    return IsingProblem(h, J, offset)
