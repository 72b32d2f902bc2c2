"""Reference tensor-assembly kernels (pure numpy).

All kernels are batched: the leading axis indexes evaluation points. Index
conventions, shared with the compiled backend:

    g_inv[m, n, n]        inverse metric
    dg[m, l, a, b]        coordinate derivative  d_l g_ab
    d2g[m, l, k, a, b]    second derivative      d_l d_k g_ab
    gamma[m, k, i, j]     Christoffel symbols    Gamma^k_ij
"""

import numpy as np


def christoffel(g_inv: np.ndarray, dg: np.ndarray) -> np.ndarray:
    """Gamma^k_ij = 1/2 g^{ks} (d_i g_js + d_j g_is - d_s g_ij)."""
    s = np.einsum("mijs->msij", dg) + np.einsum("mjis->msij", dg) - dg
    return 0.5 * np.einsum("mks,msij->mkij", g_inv, s)


def christoffel_derivative(g_inv: np.ndarray, dg: np.ndarray, d2g: np.ndarray) -> np.ndarray:
    """d_l Gamma^k_ij, returned as [m, l, k, i, j]."""
    # S_sij = d_i g_js + d_j g_is - d_s g_ij  and its l-derivative
    s = np.einsum("mijs->msij", dg) + np.einsum("mjis->msij", dg) - dg
    ds = (
        np.einsum("mlijs->mlsij", d2g)
        + np.einsum("mljis->mlsij", d2g)
        - np.einsum("mlsij->mlsij", d2g)
    )
    dginv = -np.einsum("mka,mlab,mbs->mlks", g_inv, dg, g_inv)
    out = 0.5 * np.einsum("mlks,msij->mlkij", dginv, s)
    out += 0.5 * np.einsum("mks,mlsij->mlkij", g_inv, ds)
    return out


def ricci_from_jet(g_inv: np.ndarray, dg: np.ndarray, d2g: np.ndarray) -> np.ndarray:
    """Ricci tensor from the metric 2-jet.

    Ric_ij = d_k Gamma^k_ij - d_j Gamma^k_ik
             + Gamma^k_ks Gamma^s_ij - Gamma^k_js Gamma^s_ik
    """
    gamma = christoffel(g_inv, dg)
    dgamma = christoffel_derivative(g_inv, dg, d2g)
    ric = np.einsum("mkkij->mij", dgamma)
    ric -= np.einsum("mjkik->mij", dgamma)
    ric += np.einsum("mkks,msij->mij", gamma, gamma)
    ric -= np.einsum("mkjs,msik->mij", gamma, gamma)
    return 0.5 * (ric + ric.transpose(0, 2, 1))


def covariant_hessian(df: np.ndarray, d2f: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """Hess(f)_ij = d_i d_j f - Gamma^k_ij d_k f."""
    return d2f - np.einsum("mkij,mk->mij", gamma, df)


def vector_divergence(gamma: np.ndarray, v: np.ndarray, dv: np.ndarray) -> np.ndarray:
    """div V = d_a V^a + Gamma^a_as V^s for a contravariant field V.

    dv[m, i, a] = d_i V^a.
    """
    return np.einsum("maa->m", dv) + np.einsum("maas,ms->m", gamma, v)


def tensor_divergence(
    g_inv: np.ndarray, gamma: np.ndarray, t: np.ndarray, dt: np.ndarray
) -> np.ndarray:
    """(delta T)_i = g^{jk} (d_k T_ij - Gamma^s_ki T_sj - Gamma^s_kj T_is).

    dt[m, l, a, b] = d_l T_ab for a covariant symmetric 2-tensor field T.
    """
    cov = dt - np.einsum("mski,msj->mkij", gamma, t)
    cov -= np.einsum("mskj,mis->mkij", gamma, t)
    return np.einsum("mjk,mkij->mi", g_inv, cov)


def sym2_norm2(g_inv: np.ndarray, t: np.ndarray) -> np.ndarray:
    """|T|^2 = g^{ia} g^{jb} T_ij T_ab."""
    return np.einsum("mia,mjb,mij,mab->m", g_inv, g_inv, t, t)


def raise_index(g_inv: np.ndarray, w: np.ndarray) -> np.ndarray:
    """w^i = g^{ij} w_j."""
    return np.einsum("mij,mj->mi", g_inv, w)
