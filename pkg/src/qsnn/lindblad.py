"""Lindblad generators in superoperator form, propagators, and an RK4 reference integrator."""
from dataclasses import dataclass, field

import numpy as np

from .linalg import matexp, unvec, vec

HERMITIAN_TOL = 1e-12
# accumulated roundoff over d**2 exponentials
EIGENVALUE_FLOOR = -1e-9


@dataclass(frozen=True)
class GeneratorSpec:
    """A Hamiltonian plus a list of jump operators on a d-dimensional space."""

    hamiltonian: np.ndarray
    lindblads: list = field(default_factory=list)

    def __post_init__(self):
        h = np.asarray(self.hamiltonian, dtype=complex)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise ValueError(f"hamiltonian must be square, got shape {h.shape}")
        if not np.all(np.isfinite(h)):
            raise ValueError("hamiltonian contains non-finite entries")
        if np.max(np.abs(h - h.conj().T), initial=0.0) > HERMITIAN_TOL:
            raise ValueError("hamiltonian is not Hermitian")
        ls = [np.asarray(op, dtype=complex) for op in self.lindblads]
        for op in ls:
            if op.shape != h.shape:
                raise ValueError(f"lindblad operator shape {op.shape} != {h.shape}")
            if not np.all(np.isfinite(op)):
                raise ValueError("lindblad operator contains non-finite entries")
        object.__setattr__(self, "hamiltonian", h)
        object.__setattr__(self, "lindblads", ls)

    @property
    def dim(self):
        return self.hamiltonian.shape[0]


def hamiltonian_superop(h):
    """Superoperator of rho -> -i[H, rho]."""
    eye = np.eye(h.shape[0])
    return 1j * (np.kron(h.conj(), eye) - np.kron(eye, h))


def dissipator_superop(op):
    """Superoperator of rho -> L rho L^+ - {L^+ L, rho}/2."""
    eye = np.eye(op.shape[0])
    lbar = op.conj()
    return (np.kron(lbar, op)
            - 0.5 * np.kron(eye, op.conj().T @ op)
            - 0.5 * np.kron(lbar.conj().T @ lbar, eye))


def build_liouvillian(spec):
    """d**2 x d**2 generator acting on column-stacked density matrices."""
    out = hamiltonian_superop(spec.hamiltonian)
    for op in spec.lindblads:
        out = out + dissipator_superop(op)
    return out


def trace_residual(liouvillian):
    """max |vec(I)^+ L|; zero for a trace-preserving generator."""
    d = int(round(np.sqrt(liouvillian.shape[0])))
    return float(np.max(np.abs(vec(np.eye(d)).conj().T @ liouvillian)))


def propagator(liouvillian, t):
    if not np.isfinite(t) or t < 0:
        raise ValueError(f"duration must be finite and non-negative, got {t}")
    return matexp(np.asarray(liouvillian) * t)


def check_density(rho, atol=1e-10):
    """Raise ValueError unless ``rho`` is Hermitian, unit-trace and PSD (to tolerance)."""
    rho = np.asarray(rho)
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > atol:
        raise ValueError(f"density matrix not Hermitian (deviation {herm:.3g})")
    tr = np.trace(rho)
    if abs(tr - 1) > atol:
        raise ValueError(f"density matrix trace is {tr.real:.12g}")
    lo = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
    if lo < EIGENVALUE_FLOOR:
        raise ValueError(f"density matrix has eigenvalue {lo:.3g}")
    return rho


def evolve(rho, prop, check=True):
    """Apply a superoperator propagator to a density matrix."""
    rho = np.asarray(rho, dtype=complex)
    d = rho.shape[0]
    if prop.shape != (d * d, d * d):
        raise ValueError(f"propagator shape {prop.shape} incompatible with {d}x{d} state")
    out = unvec(prop @ vec(rho), d)
    if check:
        check_density(out)
    return out


def lindblad_rhs(spec, rho):
    """Right-hand side of the master equation at the matrix level."""
    h = spec.hamiltonian
    drho = -1j * (h @ rho - rho @ h)
    for op in spec.lindblads:
        opd = op.conj().T
        ld = opd @ op
        drho = drho + op @ rho @ opd - 0.5 * (ld @ rho + rho @ ld)
    return drho


def ode_oracle(spec, rho0, t, steps):
    """Fixed-step classic RK4 integration of the master equation; a test oracle."""
    if steps < 1:
        raise ValueError("steps must be positive")
    rho = np.array(rho0, dtype=complex)
    dt = t / steps
    for _ in range(steps):
        k1 = lindblad_rhs(spec, rho)
        k2 = lindblad_rhs(spec, rho + 0.5 * dt * k1)
        k3 = lindblad_rhs(spec, rho + 0.5 * dt * k2)
        k4 = lindblad_rhs(spec, rho + dt * k3)
        rho = rho + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return rho
