"""Dimension theory for group-cut deformation strata.

For a subgroup datum given by its Lie lattice inside End(M), the stratum
dimension data compares the tangent space cut out by the group with the
codimension of the group's largest negative stable lattice.  The full
general-linear case reduces to the slope-pair codimension sum; the
principally quasi-polarized case halves it with a boundary correction and
supplies the Cayley square root of unipotents.
"""

from __future__ import annotations

from fractions import Fraction

from .core import (TangentSpace, codim_of_dieudonne, largest_sub_dieudonne,
                   nu_image)
from .errors import (CertificateFailed, CertificateInvalid,
                     SlopeSymmetryViolated, VerificationMismatch,
                     WrongCharacteristic)
from .isocrystal import (EndDecomposition, FIsocrystal, SlopeData,
                         end_frobenius, mat_to_vec, vec_to_mat)
from .lattices import (Lattice, intersect, invert_matrix, lattice_sum,
                       matrix_kernel, saturate)
from .modp import gf_intersection, gf_spaces_equal
from .series import TruncatedSeries


class GroupData:
    """A flat subgroup of the automorphisms of M, given through its Lie
    lattice (saturated in End(M)), with its certificates."""

    __slots__ = ("kind", "crystal", "lie", "gram", "phi_stable")

    def __init__(self, kind, crystal, lie, gram=None):
        self.kind = kind
        self.crystal = crystal
        self.lie = lie
        self.gram = gram
        self.phi_stable = None


def group_full_gl(crystal: FIsocrystal) -> GroupData:
    gd = GroupData("full-gl", crystal,
                   Lattice.standard(crystal.ctx, crystal.rank ** 2))
    gd.phi_stable = True
    return gd


def group_symplectic(crystal: FIsocrystal, gram_rows) -> GroupData:
    """Lie algebra {x : psi(xu, v) + psi(u, xv) = 0} of the symplectic
    group of a perfect alternating form; certifies the form."""
    ctx = crystal.ctx
    r = crystal.rank
    g = [[ctx.scalar(x) for x in row] for row in gram_rows]
    _check_alternating_perfect(ctx, g)
    _check_polarization_compat(crystal, g)
    # condition rows for x^T G + G x = 0, unknowns x (row-major)
    rows = []
    for a in range(r):
        for b in range(r):
            row = [ctx.zero] * (r * r)
            # (x^T G)_{ab} = sum_k x[k][a] G[k][b]
            for k in range(r):
                row[k * r + a] = row[k * r + a] + g[k][b]
            # (G x)_{ab} = sum_k G[a][k] x[k][b]
            for k in range(r):
                row[k * r + b] = row[k * r + b] + g[a][k]
            rows.append(row)
    kern = matrix_kernel(ctx, rows, ctx.N)
    lie = Lattice.from_columns(ctx, r * r, kern)
    gd = GroupData("symplectic", crystal, lie, gram=g)
    gd.phi_stable = _check_phi_stability(crystal, lie)
    if not gd.phi_stable:
        raise CertificateInvalid(
            "symplectic Lie algebra is not Frobenius-stable")
    return gd


def group_custom(crystal: FIsocrystal, basis_vectors) -> GroupData:
    """Custom subgroup from a Lie-lattice basis; checks bracket closure
    and Frobenius stability of the rational span."""
    ctx = crystal.ctx
    r = crystal.rank
    cols = [[ctx.scalar(x) for x in v] for v in basis_vectors]
    lie = saturate(Lattice.from_columns(ctx, r * r, cols),
                   Lattice.standard(ctx, r * r))
    mats = [vec_to_mat(list(c), r) for c in lie.cols]
    for i, ma in enumerate(mats):
        for j, mb in enumerate(mats):
            br = _mat_sub(ctx, _mat_mul(ctx, ma, mb), _mat_mul(ctx, mb, ma))
            if not lie.contains_vector(mat_to_vec(br)):
                raise CertificateInvalid(
                    f"bracket of basis elements {i}, {j} leaves the "
                    "Lie lattice")
    gd = GroupData("custom", crystal, lie)
    gd.phi_stable = _check_phi_stability(crystal, lie)
    if not gd.phi_stable:
        raise CertificateInvalid("Lie span is not Frobenius-stable")
    return gd


def _check_phi_stability(crystal, lie):
    """phi(lie[1/p]) = lie[1/p]: saturation of the conjugated lattice
    agrees with the (saturated) lattice."""
    ctx = crystal.ctx
    amb = Lattice.standard(ctx, crystal.rank ** 2)
    img = end_frobenius(crystal)(lie)
    return saturate(img, amb).equals(lie)


def _check_alternating_perfect(ctx, g):
    r = len(g)
    for i in range(r):
        if not g[i][i].is_zero():
            raise CertificateInvalid("form has a non-zero diagonal entry")
        for j in range(r):
            if not (g[i][j] + g[j][i]).is_zero():
                raise CertificateInvalid("form is not alternating")
    _, vdet = invert_matrix(ctx, g)
    if vdet != 0:
        raise CertificateInvalid("form is not perfect (non-unit Gram)")


def _check_polarization_compat(crystal, g):
    """psi(phi x, phi y) = p sigma(psi(x, y)): matrix identity
    A^T G A = p sigma(G)."""
    ctx = crystal.ctx
    r = crystal.rank
    arows = [list(rw) for rw in crystal.phi.rows]
    at = [[arows[j][i] for j in range(r)] for i in range(r)]
    lhs = _mat_mul(ctx, _mat_mul(ctx, at, g), arows)
    for i in range(r):
        for j in range(r):
            want = g[i][j].frobenius() * ctx.p
            if not (lhs[i][j] - want).is_zero():
                raise CertificateInvalid(
                    "form is not Frobenius-compatible at twist p")


def _mat_mul(ctx, a, b):
    r = len(a)
    m = len(b)
    c = len(b[0]) if m else 0
    out = [[ctx.zero] * c for _ in range(r)]
    for i in range(r):
        for k in range(m):
            x = a[i][k]
            if x.is_zero():
                continue
            for j in range(c):
                if not b[k][j].is_zero():
                    out[i][j] = out[i][j] + x * b[k][j]
    return out


def _mat_sub(ctx, a, b):
    return [[x - y for x, y in zip(r1, r2)] for r1, r2 in zip(a, b)]


# ---------------------------------------------------------------------------
# the constant-locus dimension formula


def traverso_dimension(crystal: FIsocrystal, slope_data: SlopeData,
                       decomp: EndDecomposition,
                       tangent: TangentSpace | None = None):
    """(lattice side, closed form) of the constant-locus dimension:
    the tangent dimension of the largest negative stable lattice against
    the slope-pair sum; raises on disagreement."""
    tangent = tangent or TangentSpace(crystal)
    O = largest_sub_dieudonne(decomp.V_minus, crystal, mode="negative")
    lattice_side = nu_image(O, tangent)[0] if O.rank else 0
    slopes = slope_data.slopes
    closed = Fraction(0)
    for i, (a, ra) in enumerate(slopes):
        for (b, rb) in slopes[i + 1:]:
            closed += Fraction(ra * rb) * (Fraction(b) - Fraction(a))
    assert closed.denominator == 1
    closed = int(closed)
    if lattice_side != closed:
        raise VerificationMismatch(
            f"tangent dimension {lattice_side} != slope-pair sum {closed}")
    return lattice_side, closed


def codim_complement_form(slope_data: SlopeData):
    """c d - (1/2) sum |c_a d_b - c_b d_a| over ordered slope pairs: the
    complementary form of the dimension formula (pure slope arithmetic)."""
    hodge = slope_data.hodge_numbers()
    slopes = slope_data.slope_list
    c = sum(hodge[a][0] for a in slopes)
    d = sum(hodge[a][1] for a in slopes)
    acc = Fraction(0)
    for a in slopes:
        for b in slopes:
            ca, da = hodge[a]
            cb, db = hodge[b]
            acc += abs(ca * db - cb * da)
    return c * d - acc / 2


# ---------------------------------------------------------------------------
# group strata


def n_g_mu(gd: GroupData, split) -> tuple[Lattice, int]:
    """The weight-one part of the Lie lattice (endomorphisms killing F^0
    and sending M/F^0 into F^0), and its rank; the rank equals the
    dimension of its tangent image."""
    low = split.hom_f1_f0()
    NG = intersect(low, gd.lie)
    tangent = TangentSpace(gd.crystal)
    dim, _ = nu_image(NG, tangent)
    if dim != NG.rank:
        raise CertificateInvalid(
            "tangent classes of the weight-one part are degenerate")
    return NG, NG.rank


class StrataReport:
    __slots__ = ("n_G", "c_minus_G", "tangent_dim", "c_minus_full",
                 "fact_a_lhs", "fact_a_rhs", "fact_a_consistent",
                 "complement_found", "fact_b_holds", "ranks")

    def as_dict(self):
        return {k: getattr(self, k, None) for k in self.__slots__}


def strata_dims(gd: GroupData, crystal: FIsocrystal,
                slope_data: SlopeData, decomp: EndDecomposition,
                split, tangent: TangentSpace | None = None) -> StrataReport:
    """Stratum dimension data for the subgroup: the negative lattices cut
    by the Lie algebra, their tangent images, and the two consistency
    facts relating them."""
    ctx = crystal.ctx
    tangent = tangent or TangentSpace(crystal)
    rep = StrataReport()
    NG, nG = n_g_mu(gd, split)
    rep.n_G = nG
    V_minus = decomp.V_minus
    O_minus = largest_sub_dieudonne(V_minus, crystal, mode="negative")
    VmG = intersect(V_minus, gd.lie)
    OmG = intersect(O_minus, VmG)
    rep.ranks = {"V_minus(G)": VmG.rank, "O_minus(G)": OmG.rank,
                 "O_minus": O_minus.rank}
    if OmG.rank:
        cmg = nu_image(OmG, tangent)[0]
        # tangent dimension equals the Verschiebung colength
        if cmg != codim_of_dieudonne(OmG, crystal):
            raise VerificationMismatch(
                "tangent dimension of O_minus(G) differs from its "
                "codimension")
    else:
        cmg = 0
    rep.c_minus_G = cmg
    rep.c_minus_full = (nu_image(O_minus, tangent)[0]
                        if O_minus.rank else 0)
    # tangent space of the stratum: nu(N_G(mu)) cap nu(O_minus)
    _, ng_basis = nu_image(NG, tangent)
    _, om_basis = nu_image(O_minus, tangent)
    t_basis = gf_intersection(ctx, ng_basis, om_basis)
    rep.tangent_dim = len(t_basis)
    if rep.tangent_dim < cmg:
        raise VerificationMismatch(
            "stratum tangent space is smaller than the stable-lattice "
            "codimension")
    # fact (a): dim t = c_-(G) iff nu(O_-(G)) = nu(V_-(G)) cap nu(O_-)
    _, omg_basis = nu_image(OmG, tangent)
    _, vmg_basis = nu_image(VmG, tangent)
    cap = gf_intersection(ctx, vmg_basis, om_basis)
    rep.fact_a_lhs = (rep.tangent_dim == cmg)
    rep.fact_a_rhs = gf_spaces_equal(ctx, omg_basis, cap)
    rep.fact_a_consistent = (rep.fact_a_lhs == rep.fact_a_rhs)
    # fact (b): a stable complement forces the equality
    comp = _stable_complement(gd, crystal, decomp, VmG)
    rep.complement_found = comp is not None
    if comp is not None:
        rep.fact_b_holds = rep.fact_a_rhs
        if not rep.fact_b_holds:
            raise VerificationMismatch(
                "a stable complement exists but the tangent identity "
                "fails")
    else:
        rep.fact_b_holds = None
    return rep


def _stable_complement(gd, crystal, decomp, VmG):
    """A complement of V_-(G) in V_- stable under p phi, searched through
    the trace-orthogonal lattice of the Lie algebra."""
    ctx = crystal.ctx
    r = crystal.rank
    V_minus = decomp.V_minus
    if gd.kind == "full-gl":
        return Lattice.zero(ctx, r * r) if VmG.equals(V_minus) else None
    # perp = {x : Tr(x, lie basis) = 0}
    rows = []
    for col in gd.lie.cols:
        row = []
        colv = list(col)
        for a in range(r):
            for b in range(r):
                # Tr(E_ab, col) = col[b*r + a]
                row.append(colv[b * r + a])
        rows.append(row)
    kern = matrix_kernel(ctx, rows, ctx.N - gd.lie.loss)
    perp = Lattice.from_columns(ctx, r * r, kern, loss=gd.lie.loss)
    comp = intersect(V_minus, perp)
    if comp.rank + VmG.rank != V_minus.rank:
        return None
    if not lattice_sum(comp, VmG).equals(V_minus):
        return None
    pphi = end_frobenius(crystal).scale_p(1)
    if not comp.contains(pphi(comp)):
        return None
    return comp


# ---------------------------------------------------------------------------
# the principally quasi-polarized case


def manin_symmetry_check(slope_data: SlopeData):
    slopes = slope_data.slopes
    m = len(slopes)
    for i in range(m):
        a, ra = slopes[i]
        b, rb = slopes[m - 1 - i]
        if Fraction(a) + Fraction(b) != 1 or ra != rb:
            raise SlopeSymmetryViolated(
                f"slopes {a} and {b} are not symmetric with matched "
                "multiplicities")


def polarized_closed_form(slope_data: SlopeData):
    """Half the slope-pair sum plus the boundary terms r_a (1/2 - a) over
    pairs (a, 1-a)."""
    slopes = slope_data.slopes
    total = Fraction(0)
    for i, (a, ra) in enumerate(slopes):
        for (b, rb) in slopes[i + 1:]:
            total += Fraction(ra * rb) * (Fraction(b) - Fraction(a))
    n1 = total / 2
    slopeset = {a for (a, _) in slopes}
    for (a, ra) in slopes:
        b = 1 - Fraction(a)
        if a < b and b in slopeset:
            n1 += Fraction(ra) * (Fraction(1, 2) - Fraction(a))
    assert n1.denominator == 1
    return int(n1)


def polarized_dim(crystal: FIsocrystal, slope_data: SlopeData,
                  decomp: EndDecomposition, split, gram_rows,
                  tangent: TangentSpace | None = None):
    """(lattice side, closed form) for the symplectic stratum dimension;
    checks the polarization certificates and Manin symmetry first."""
    c, d = _cd(crystal)
    if c != d:
        raise CertificateInvalid(
            "polarized modules need equal dimension and codimension")
    manin_symmetry_check(slope_data)
    gd = group_symplectic(crystal, gram_rows)
    _check_isotropy(split, gd.gram)
    rep = strata_dims(gd, crystal, slope_data, decomp, split, tangent)
    closed = polarized_closed_form(slope_data)
    if rep.c_minus_G != closed:
        raise VerificationMismatch(
            f"symplectic lattice dimension {rep.c_minus_G} != closed "
            f"form {closed}")
    return rep.c_minus_G, closed


def _cd(crystal):
    from .isocrystal import dim_codim
    return dim_codim(crystal)


def _check_isotropy(split, g):
    """F^1 and F^0 must pair to zero with themselves, so the weight
    cocharacter lands in the similitude group."""
    ctx = split.ctx
    for cols in (split.F1.cols, split.F0.cols):
        cl = [list(c) for c in cols]
        for u in cl:
            for v in cl:
                acc = ctx.zero
                for i in range(len(u)):
                    for j in range(len(v)):
                        if not (u[i].is_zero() or v[j].is_zero()
                                or g[i][j].is_zero()):
                            acc = acc + u[i] * g[i][j] * v[j]
                if not acc.is_zero():
                    raise CertificateInvalid(
                        "a Hodge summand is not isotropic for the form")


# ---------------------------------------------------------------------------
# Cayley elements


def cayley_element(crystal: FIsocrystal, gd: GroupData, vectors,
                   dmax: int) -> dict:
    """(1 - V)(1 + V)^{-1} for V = sum v_i x_i, as a series matrix.

    Requires p > 2.  Certifies that the result preserves the form as a
    series identity and that its deviation from the identity has all
    monomial coefficients inside the supplied negative lattice.
    """
    ctx = crystal.ctx
    if ctx.p == 2:
        raise WrongCharacteristic("the Cayley construction needs p > 2")
    if gd.gram is None:
        raise CertificateInvalid("Cayley elements need a symplectic datum")
    r = crystal.rank
    n = len(vectors)
    for k, v in enumerate(vectors):
        if not gd.lie.contains_vector([ctx.scalar(x) for x in v]):
            raise CertificateFailed(
                f"vector {k} is not in the Lie lattice")
    zero = TruncatedSeries.zero(ctx, n, dmax)
    V = [[zero for _ in range(r)] for _ in range(r)]
    for i, v in enumerate(vectors):
        mat = vec_to_mat([ctx.scalar(x) for x in v], r)
        xi = TruncatedSeries.variable(ctx, n, dmax, i)
        for a in range(r):
            for b in range(r):
                if not mat[a][b].is_zero():
                    V[a][b] = V[a][b] + xi * mat[a][b]
    one = TruncatedSeries.constant(ctx, n, dmax, ctx.one)
    ident = [[one if i == j else zero for j in range(r)] for i in range(r)]
    # (1 + V)^{-1} by the finite geometric series (V has positive degree)
    inv = [row[:] for row in ident]
    term = [[-V[i][j] for j in range(r)] for i in range(r)]
    for _ in range(dmax):
        if all(s.is_zero() for row in term for s in row):
            break
        inv = [[inv[i][j] + term[i][j] for j in range(r)] for i in range(r)]
        term = _smat_mul(term, [[-V[i][j] for j in range(r)]
                                for i in range(r)])
    one_minus = [[ident[i][j] - V[i][j] for j in range(r)]
                 for i in range(r)]
    w = _smat_mul(one_minus, inv)
    # certificate (a): w^T G w = G through the window
    gser = [[TruncatedSeries.constant(ctx, n, dmax, gd.gram[i][j])
             for j in range(r)] for i in range(r)]
    wt = [[w[j][i] for j in range(r)] for i in range(r)]
    lhs = _smat_mul(_smat_mul(wt, gser), w)
    window = dmax
    for i in range(r):
        for j in range(r):
            diff = lhs[i][j] - gser[i][j]
            window = min(window, diff.valid)
            if not diff.is_zero_through(diff.valid):
                raise CertificateFailed(
                    "form is not preserved by the Cayley element")
    # certificate (b): coefficients of w - 1 lie in the negative lattice
    o_minus_g = ambient_o_minus(crystal)
    mono_set = set()
    for i in range(r):
        for j in range(r):
            d_ = w[i][j] - ident[i][j]
            mono_set.update(d_.coeffs.keys())
    for e in sorted(mono_set):
        mat = [[(w[i][j] - ident[i][j]).coefficient(e)
                for j in range(r)] for i in range(r)]
        if not o_minus_g.contains_vector(mat_to_vec(mat)):
            raise CertificateFailed(
                f"coefficient of monomial {e} leaves the negative "
                "lattice")
    return {
        "matrix": w,
        "symplectic_window": window,
        "coefficients_in_O_minus": True,
    }


def ambient_o_minus(crystal):
    """The largest negative stable lattice of the ambient module (the
    coefficient target of the Cayley deviation)."""
    from .isocrystal import slope_split, end_decompose
    S = slope_split(crystal)
    E = end_decompose(crystal, S)
    return largest_sub_dieudonne(E.V_minus, crystal, mode="negative")


def _smat_mul(a, b):
    r = len(a)
    m = len(b)
    c = len(b[0]) if m else 0
    out = []
    for i in range(r):
        row = []
        for j in range(c):
            acc = None
            for k in range(m):
                t = a[i][k] * b[k][j]
                acc = t if acc is None else acc + t
            row.append(acc)
        out.append(row)
    return out
