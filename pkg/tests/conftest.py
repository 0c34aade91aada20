import numpy as np
import pytest

from mpform.problem import MatrixField, ProblemSpec


def make_spec(n=1, k=1, r=0, G=None, F=None, W_R=None, P0=None, P1=None, S=None, H=None, T=1.0, f=None, name=""):
    """Spec with heat-like defaults for every coefficient not given."""
    G = np.eye(n, k) if G is None else G
    F = np.zeros((2 * k, r)) if F is None else F
    const = MatrixField.constant
    return ProblemSpec(
        n=n, k=k, r=r, G=G, F=F,
        W_R=W_R if W_R is not None else const(np.zeros((r, r)), (r, r)),
        P0=P0 if P0 is not None else const(np.zeros((n, n))),
        P1=P1 if P1 is not None else const(np.zeros((n, n))),
        S=S if S is not None else const(np.eye(k)),
        H=H if H is not None else const(np.eye(n)),
        T=T, f=f, name=name,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_orthonormal(rng, n, k):
    X = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
    Q, _ = np.linalg.qr(X)
    return Q
