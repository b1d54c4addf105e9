"""Named identities with default parameters, as driven by the command line."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping

from . import identities as ident
from .errors import DomainError
from .ortho import asc_orthogonality_residual, lemma1_residual, qcharlier_orthogonality_residual
from .polys import ASCParams, CharlierParams, qlaguerre_relation_residual
from .qcore import GrafInstance, QContext, one_phi_one_shift_residual
from .report import ResidualReport


def _qf(q) -> float:
    return q.q if isinstance(q, QContext) else float(q)


def _addition(q, a, b, z, nu, m, theta, N, tol):
    return ident.addition_residual(q, a, b, z, nu, int(m), theta, int(N), tol)


def _product(q, a, b, z, nu, m, n, tol):
    return ident.product_residual(q, a, b, z, nu, int(m), int(n), tol=tol)


def _lemma1(q, a, b, nu, m, n, r, tol):
    return lemma1_residual(int(m), int(n), int(r), nu, ASCParams(a, b, _qf(q)), ctx=_ctx_or_none(q), tol=tol)


def _ctx_or_none(q):
    return q if isinstance(q, QContext) else None


def _lemma2(q, a, b, c, d, z, mu, nu, tol):
    return ident.lemma2_residual(a, b, c, d, z, mu, nu, q, tol)


def _inversion(q, p, a, b, c, d, z, tol):
    return ident.series_inversion_residual(int(p), a, b, c, d, z, q, tol)


def _heine0(q, a, c, z, tol):
    return ident.heine_b0_residual(a, c, z, q, tol)


def _ks(q, nu, x, y, s, N, tol):
    return ident.ks_addition_residual(nu, x, y, s, q, int(N), tol)


def _hlq(q, p, m, z, N, tol):
    return ident.hansen_lommel_q_residual(int(p), int(m), z, q, int(N), tol)


def _hl(p, z, M, tol):
    return ident.hansen_lommel_classical_residual(int(p), z, int(M), tol)


def _charlier_ortho(q, a, m, r, tol):
    return qcharlier_orthogonality_residual(int(m), int(r), CharlierParams(a, _qf(q)), ctx=_ctx_or_none(q), tol=tol)


def _charlier_ext(q, m, r, mu, alpha, beta, theta, xi, N, tol):
    if xi is not None:
        theta = None
    return ident.qcharlier_extension_residual(int(m), int(r), mu, alpha, beta, q, theta, xi, int(N), tol)


def _charlier_ext_special(q, m, r, mu, alpha, beta, N, tol):
    return ident.qcharlier_extension_special_residual(int(m), int(r), mu, alpha, beta, q, int(N), tol)


def _asc_ortho(q, a, b, k, l, tol):
    return asc_orthogonality_residual(int(k), int(l), ASCParams(a, b, _qf(q)), ctx=_ctx_or_none(q), tol=tol)


def _graf(nu, x, y, psi, M, tol):
    return ident.graf_classical_residual(GrafInstance(nu, x, y, psi), int(M), tol)


def _graf_product(nu, x, y, m, tol):
    return ident.graf_product_classical_residual(GrafInstance(nu, x, y, 0.0, int(m)), tol=tol)


def _qlag(q, m, alpha, a, tol):
    if isinstance(q, QContext):
        q = q.q
    return qlaguerre_relation_residual(int(m), alpha, a, q, tol)


def _shift(q, a, z, n, tol):
    return one_phi_one_shift_residual(a, z, int(n), q, tol)


@dataclass(frozen=True)
class IdentityEntry:
    name: str
    runner: Callable[..., ResidualReport]
    defaults: Mapping
    summary: str
    truncation: str | None = None

    @property
    def params(self) -> tuple:
        return tuple(self.defaults)

    def run(self, **params) -> ResidualReport:
        unknown = sorted(set(params) - set(self.defaults))
        if unknown:
            raise DomainError(f"{self.name} has no parameter(s) {', '.join(unknown)}")
        merged = dict(self.defaults)
        merged.update(params)
        return self.runner(**merged)


_ENTRIES = [
    IdentityEntry(
        "addition", _addition,
        dict(q=0.5, a=0.3, b=0.2, z=0.4, nu=1.5, m=2, theta=math.pi / 3, N=40, tol=1e-9),
        "2phi1 times an Al-Salam-Chihara polynomial expanded in Al-Salam-Chihara polynomials", "N",
    ),
    IdentityEntry(
        "product", _product,
        dict(q=0.5, a=0.3, b=0.2, z=0.4, nu=1.5, m=2, n=1, tol=1e-8),
        "Fourier coefficients of the addition formula by quadrature",
    ),
    IdentityEntry(
        "lemma1", _lemma1,
        dict(q=0.5, a=0.3, b=0.2, nu=0.5, m=1, n=0, r=1, tol=1e-9),
        "integral of S_m(aq^-nu) S_{n+m}(a) against the weight with a finite product factor",
    ),
    IdentityEntry(
        "lemma2", _lemma2,
        dict(q=0.5, a=0.2, b=0.3, c=0.4, d=0.5, z=0.6, mu=0.5, nu=1.0, tol=1e-10),
        "product of a 1phi1 and a 2phi1 as a double series",
    ),
    IdentityEntry(
        "inversion", _inversion,
        dict(q=0.5, p=3, a=0.3, b=0.4, c=0.5, d=0.6, z=0.7, tol=1e-11),
        "terminating 3phi2 summed in reverse order",
    ),
    IdentityEntry(
        "heine0", _heine0,
        dict(q=0.5, a=0.5, c=0.3, z=0.6, tol=1e-11),
        "Heine transformation with one upper parameter zero",
    ),
    IdentityEntry(
        "ks", _ks,
        dict(q=0.5, nu=0, x=0.3, y=0.2, s=0.8, N=30, tol=1e-9),
        "addition formula for the Jackson q-Bessel function (integer nu)", "N",
    ),
    IdentityEntry(
        "hansen_lommel_q", _hlq,
        dict(q=0.5, p=0, m=2, z=0.4, N=40, tol=1e-10),
        "q-analogue of the Hansen-Lommel orthogonality", "N",
    ),
    IdentityEntry(
        "hansen_lommel", _hl,
        dict(p=0, z=1.0, M=40, tol=1e-11),
        "sum_n J_n(z) J_{n+p}(z) = delta_{0,p}", "M",
    ),
    IdentityEntry(
        "charlier_ortho", _charlier_ortho,
        dict(q=0.5, a=0.7, m=2, r=2, tol=1e-10),
        "discrete orthogonality of the q-Charlier polynomials",
    ),
    IdentityEntry(
        "charlier_ext", _charlier_ext,
        dict(q=0.5, m=1, r=2, mu=0.5, alpha=0.6, beta=0.8, theta=1.0, xi=None, N=60, tol=1e-9),
        "q-Charlier orthogonality extended by an Al-Salam-Chihara factor", "N",
    ),
    IdentityEntry(
        "charlier_ext_special", _charlier_ext_special,
        dict(q=0.5, m=2, r=1, mu=1.0, alpha=0.5, beta=0.7, N=60, tol=1e-9),
        "the extension at the point where the polynomial factor is a q-shifted factorial", "N",
    ),
    IdentityEntry(
        "asc_ortho", _asc_ortho,
        dict(q=0.5, a=0.3, b=0.2, k=1, l=2, tol=1e-9),
        "orthogonality of the Al-Salam-Chihara polynomials",
    ),
    IdentityEntry(
        "graf", _graf,
        dict(nu=0.5, x=2.0, y=0.5, psi=1.0, M=40, tol=1e-10),
        "Graf's addition formula for Bessel functions", "M",
    ),
    IdentityEntry(
        "graf_product", _graf_product,
        dict(nu=0.5, x=2.0, y=0.5, m=1, tol=1e-9),
        "Bessel product as a Fourier coefficient of Graf's left member",
    ),
    IdentityEntry(
        "qlag_relation", _qlag,
        dict(q=0.5, m=4, alpha=0.5, a=0.6, tol=1e-10),
        "q-Charlier at q^{-alpha-m} as a q-Laguerre polynomial",
    ),
    IdentityEntry(
        "one_phi_one_shift", _shift,
        dict(q=0.5, a=0.3, z=0.4, n=2, tol=1e-10),
        "index shift of the regularized 1phi1",
    ),
]

REGISTRY: dict = {e.name: e for e in _ENTRIES}


def get(name: str) -> IdentityEntry:
    try:
        return REGISTRY[name]
    except KeyError:
        raise DomainError(f"unknown identity {name!r}; known: {', '.join(REGISTRY)}") from None


__all__ = ["IdentityEntry", "REGISTRY", "get"]
