"""Trace duality and the signed stable-lattice family on End(M).

For a set Y of slope pairs (a, b) with a < b, the corresponding positive
and negative Hom-block sums carry a perfect trace pairing.  The module
computes the integral lattices cut out of End(M), their largest
sub-Dieudonne and smallest super-Dieudonne refinements, trace duals (with
the dual/iterative cross-check), the per-pair codimension table, and the
string/slice combinatorics of slope-pair subsets.
"""

from __future__ import annotations

from fractions import Fraction

from .core import (codim_of_dieudonne, largest_sub_dieudonne, nu_image,
                   smallest_super_dieudonne)
from .errors import DualityMismatch, VerificationMismatch
from .isocrystal import (EndDecomposition, FIsocrystal, SlopeData,
                         block_projector, vec_to_mat)
from .errors import PrecisionExhausted
from .lattices import (Lattice, _reduce_columns, intersect,
                       invert_matrix_exact, smith_valuations)


class SlopePairSet:
    """A subset Y of {(a, b) : a < b slopes}; square-zero when no slope
    occurs both as a source and as a target."""

    __slots__ = ("pairs", "slopes")

    def __init__(self, pairs, slopes):
        slopeset = set(slopes)
        pairs = tuple(sorted(set(pairs)))
        for (a, b) in pairs:
            if a >= b:
                raise ValueError(f"pair ({a}, {b}) is not increasing")
            if a not in slopeset or b not in slopeset:
                raise ValueError(f"pair ({a}, {b}) uses unknown slopes")
        self.pairs = pairs
        self.slopes = tuple(sorted(slopeset))

    @staticmethod
    def full(slopes):
        s = sorted(slopes)
        return SlopePairSet([(a, b) for i, a in enumerate(s)
                             for b in s[i + 1:]], s)

    @staticmethod
    def singleton(a, b, slopes):
        return SlopePairSet([(a, b)], slopes)

    @property
    def s1(self):
        return sorted({a for (a, _) in self.pairs})

    @property
    def s2(self):
        return sorted({b for (_, b) in self.pairs})

    @property
    def is_square_zero(self):
        return not (set(self.s1) & set(self.s2))

    def subsets(self):
        out = []
        m = len(self.pairs)
        for mask in range(1 << m):
            sel = [self.pairs[i] for i in range(m) if mask >> i & 1]
            out.append(SlopePairSet(sel, self.slopes))
        return out

    def __iter__(self):
        return iter(self.pairs)

    def __len__(self):
        return len(self.pairs)

    def __repr__(self):
        return f"SlopePairSet({list(self.pairs)})"


# ---------------------------------------------------------------------------
# trace pairing


def trace_of_vectors(ctx, r, xvec, yvec):
    """Trace of the product of two flattened endomorphisms."""
    acc = ctx.zero
    for i in range(r):
        for j in range(r):
            a = xvec[i * r + j]
            if a.is_zero():
                continue
            b = yvec[j * r + i]
            if not b.is_zero():
                acc = acc + a * b
    return acc


def trace_frobenius_invariant(crystal: FIsocrystal, xvec, yvec) -> bool:
    """Tr(phi x, phi y) = sigma(Tr(x, y)), checked without divisions by
    clearing the conjugation denominators."""
    ctx = crystal.ctx
    r = crystal.rank
    arows = [list(row) for row in crystal.phi.rows]
    ainv, vdet = invert_matrix_exact(ctx, arows)
    e = crystal.phi.twist

    def conj_num(vec):
        mat = vec_to_mat([x.frobenius(e) for x in vec], r)
        left = _mul(ctx, arows, mat)
        return _mul(ctx, left, ainv)

    nx = conj_num(xvec)
    ny = conj_num(yvec)
    lhs = ctx.zero
    for i in range(r):
        for j in range(r):
            if not nx[i][j].is_zero() and not ny[j][i].is_zero():
                lhs = lhs + nx[i][j] * ny[j][i]
    rhs = trace_of_vectors(ctx, r, xvec, yvec).frobenius(e)
    rhs = rhs * (ctx.p ** (2 * vdet))
    return lhs == rhs


def _mul(ctx, a, b):
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


# ---------------------------------------------------------------------------
# signed block lattices


def signed_block_lattices(decomp: EndDecomposition, Y: SlopePairSet):
    """(V_plus(Y), V_minus(Y)): the integral parts of the positive and
    negative Hom-block sums over the pairs of Y."""
    crystal = decomp.crystal
    S = decomp.slope_data
    ctx = crystal.ctx
    plus_pairs = [(a, b) for (a, b) in Y.pairs]
    minus_pairs = [(b, a) for (a, b) in Y.pairs]
    if not Y.pairs:
        z = Lattice.zero(ctx, crystal.rank ** 2)
        return z, z
    pplus = block_projector(crystal, S, plus_pairs)
    pminus = block_projector(crystal, S, minus_pairs)
    from .isocrystal import _projector_fixed_lattice
    return (_projector_fixed_lattice(ctx, pplus),
            _projector_fixed_lattice(ctx, pminus))


def dual_lattice(L: Lattice, reference: Lattice) -> Lattice:
    """Trace dual of L inside the opposite block span, presented on the
    basis of a reference lattice spanning that opposite side.

    The dual { w : Tr(L, w) integral } is computed division-free: with T
    the Gram matrix of the two bases and K bounding the denominator depth,
    the coordinate lattice { c : T c = 0 mod p^K } (a stacked kernel)
    gives the dual as a p^{-K}-scaled span, so the published basis is
    exact at the working precision.  Runs at a boosted precision when K
    approaches the context exponent.
    """
    ctx = L.ctx
    if L.rank == 0 and reference.rank == 0:
        return Lattice.zero(ctx, L.ambient)
    if L.rank != reference.rank:
        raise ValueError("dual requires spans of equal dimension")
    r2 = L.ambient
    r = int(round(r2 ** 0.5))
    assert r * r == r2
    m = L.rank
    loss = max(L.loss, reference.loss)

    def build(wctx, lcols, zcols):
        gram = []
        for xcol in lcols:
            gram.append([trace_of_vectors(wctx, r, xcol, zcol)
                         for zcol in zcols])
        # the dual depth is the largest elementary divisor of the pairing
        divisors = smith_valuations(wctx, gram, neff=wctx.N - loss)
        if len(divisors) < m:
            raise PrecisionExhausted("trace pairing is degenerate")
        S = L.scale + reference.scale
        K = divisors[-1] + S + 1
        if 2 * K + 4 >= wctx.N - loss:
            return None, K
        pk = wctx.scalar(wctx.p ** K)
        stacked = [[gram[i][j] for i in range(m)] for j in range(m)]
        stacked += [[pk if i == j else wctx.zero for i in range(m)]
                    for j in range(m)]
        _, _, _, kern = _reduce_columns(wctx, stacked, wctx.N - loss,
                                        track=True, nrows=m)
        gens = []
        for kvec in kern:
            vec = [wctx.zero] * r2
            for j in range(m):
                c = kvec[j]
                if c.is_zero():
                    continue
                zc = zcols[j]
                vec = [vec[k] + c * zc[k] for k in range(r2)]
            gens.append(vec)
        out = Lattice.from_columns(wctx, r2, gens,
                                   scale=reference.scale + K - S, loss=loss)
        if out.rank != m:
            raise PrecisionExhausted("dual coordinate lattice degenerated")
        return out, K

    lcols = [list(c) for c in L.cols]
    zcols = [list(c) for c in reference.cols]
    out, K = build(ctx, lcols, zcols)
    if out is None:
        big = ctx.with_precision(ctx.N + 2 * K + 8)
        blcols = [[big.scalar(list(x.c)) for x in c] for c in lcols]
        bzcols = [[big.scalar(list(x.c)) for x in c] for c in zcols]
        bout, _ = build(big, blcols, bzcols)
        if bout is None:
            raise PrecisionExhausted("dual depth exceeded the boost")
        cols = [[ctx.scalar([v % ctx.pN for v in x.c]) for x in c]
                for c in bout.cols]
        out = Lattice.from_columns(ctx, r2, cols, scale=bout.scale,
                                   loss=loss)
    return out.folded()


class SignModuleSet:
    """The four signed stable lattices for a pair set, with their
    codimension data."""

    __slots__ = ("Y", "V_plus", "V_minus", "V_plus_minus", "V_minus_plus",
                 "O_plus", "O_minus", "O_plus_minus", "O_minus_plus",
                 "codims")

    def __init__(self, **kw):
        for k in self.__slots__:
            setattr(self, k, kw.get(k))


def sign_modules(crystal: FIsocrystal, decomp: EndDecomposition,
                 Y: SlopePairSet) -> SignModuleSet:
    """Compute the signed lattices for Y, cross-checking each mixed
    module both as a trace dual and as an iterative closure."""
    ctx = crystal.ctx
    Vp, Vm = signed_block_lattices(decomp, Y)
    if not Y.pairs:
        z = Lattice.zero(ctx, crystal.rank ** 2)
        return SignModuleSet(Y=Y, V_plus=z, V_minus=z, V_plus_minus=z,
                             V_minus_plus=z, O_plus=z, O_minus=z,
                             O_plus_minus=z, O_minus_plus=z, codims={})
    Vpm = dual_lattice(Vm, Vp)
    Vmp = dual_lattice(Vp, Vm)
    if not Vpm.contains(Vp):
        raise DualityMismatch("V_plus is not inside the dual of V_minus")
    if not Vmp.contains(Vm):
        raise DualityMismatch("V_minus is not inside the dual of V_plus")
    Op = largest_sub_dieudonne(Vp, crystal, mode="positive")
    Om = largest_sub_dieudonne(Vm, crystal, mode="negative")
    Opm_dual = dual_lattice(Om, Vp) if Om.rank else Lattice.zero(
        ctx, crystal.rank ** 2)
    Omp_dual = dual_lattice(Op, Vm) if Op.rank else Lattice.zero(
        ctx, crystal.rank ** 2)
    Opm_iter = smallest_super_dieudonne(Vpm, crystal, mode="positive")
    Omp_iter = smallest_super_dieudonne(Vmp, crystal, mode="negative")
    if not Opm_dual.equals(Opm_iter):
        raise DualityMismatch(
            "dual of O_minus disagrees with the iterative closure of "
            "the dual block")
    if not Omp_dual.equals(Omp_iter):
        raise DualityMismatch(
            "dual of O_plus disagrees with the iterative closure of "
            "the dual block")
    if not Opm_iter.contains(Op):
        raise DualityMismatch("O_plus not inside O_plus_minus")
    if not Omp_iter.contains(Om):
        raise DualityMismatch("O_minus not inside O_minus_plus")
    codims = {"c_minus": codim_of_dieudonne(Om, crystal) if Om.rank else 0}
    return SignModuleSet(Y=Y, V_plus=Vp, V_minus=Vm, V_plus_minus=Vpm,
                         V_minus_plus=Vmp, O_plus=Op, O_minus=Om,
                         O_plus_minus=Opm_iter, O_minus_plus=Omp_iter,
                         codims=codims)


# ---------------------------------------------------------------------------
# codimension formulas


def pair_codim_closed_form(slope_data: SlopeData, a, b) -> int:
    """r_a r_b (b - a) for a single pair."""
    ra = slope_data.multiplicity(a)
    rb = slope_data.multiplicity(b)
    val = Fraction(ra * rb) * (Fraction(b) - Fraction(a))
    assert val.denominator == 1
    return int(val)


def quasi_factor_codims(crystal: FIsocrystal, slope_data: SlopeData,
                        decomp: EndDecomposition, verify: bool = True):
    """Per-pair codimension table over all increasing slope pairs, with
    the closed form checked against the lattice computation, plus the sum
    identity against the codimension of the full negative module."""
    slopes = slope_data.slope_list
    table = {}
    total = 0
    for i, a in enumerate(slopes):
        for b in slopes[i + 1:]:
            closed = pair_codim_closed_form(slope_data, a, b)
            table[(a, b)] = closed
            total += closed
    if verify:
        for (a, b), closed in table.items():
            Y = SlopePairSet.singleton(a, b, slopes)
            mods = sign_modules(crystal, decomp, Y)
            lattice_side = mods.codims["c_minus"]
            if lattice_side != closed:
                raise VerificationMismatch(
                    f"pair ({a},{b}): lattice codimension {lattice_side} "
                    f"!= closed form {closed}")
        if len(slopes) > 1:
            Yfull = SlopePairSet.full(slopes)
            mods = sign_modules(crystal, decomp, Yfull)
            if mods.codims["c_minus"] != total:
                raise VerificationMismatch(
                    f"total codimension {mods.codims['c_minus']} != "
                    f"sum of quasi-factor codimensions {total}")
    return table, total


# ---------------------------------------------------------------------------
# strings and slices


def strings(slope_data: SlopeData):
    """Lower and upper strings: pairs ending at, resp. starting from,
    each slope."""
    slopes = slope_data.slope_list
    lower = {}
    upper = {}
    for a in slopes:
        lower[a] = [(b, a) for b in slopes if b < a]
        upper[a] = [(a, b) for b in slopes if b > a]
    return lower, upper


def slice_chain(slopes, level: int):
    """The square-zero set {(s_i, s_j) : i <= level < j} for sorted
    slopes; it has level*(m-level) elements."""
    s = sorted(slopes)
    m = len(s)
    if not 1 <= level <= m - 1:
        raise ValueError("level out of range")
    pairs = [(s[i], s[j]) for i in range(level) for j in range(level, m)]
    assert len(pairs) == level * (m - level)
    return SlopePairSet(pairs, s)


def max_square_zero_size(m: int) -> int:
    """Largest possible size of a square-zero pair set on m slopes."""
    half = m // 2
    return half * (m - half)


def slice_report(crystal: FIsocrystal, slope_data: SlopeData,
                 decomp: EndDecomposition, Y: SlopePairSet, tangent=None):
    """Square-zero status, the negative stable lattice of the slice, its
    tangent dimension, the codimension (the dimension of the associated
    group structure), and the monotonicity data for subsets."""
    ctx = crystal.ctx
    report = {
        "pairs": [[str(a), str(b)] for (a, b) in Y.pairs],
        "square_zero": Y.is_square_zero,
    }
    mods = sign_modules(crystal, decomp, Y)
    Om = mods.O_minus
    report["O_minus_rank"] = Om.rank
    report["c_minus"] = mods.codims.get("c_minus", 0)
    if tangent is not None and Om.rank:
        dim, _ = nu_image(Om, tangent)
        report["tangent_dimension"] = dim
    elif tangent is not None:
        report["tangent_dimension"] = 0
    if Y.is_square_zero and Om.rank:
        r = crystal.rank
        mats = [vec_to_mat(list(c), r) for c in Om.cols]
        sq = all(all(x.is_zero() for row in _mul(ctx, ma, mb) for x in row)
                 for ma in mats for mb in mats)
        report["square_vanishes"] = sq
    return report, mods


def slice_monotone(crystal: FIsocrystal, decomp: EndDecomposition,
                   Y: SlopePairSet, Y1: SlopePairSet) -> bool:
    """O_minus(Y1) = O_minus(Y) cap L_minus(Y1) for Y1 inside Y."""
    if not set(Y1.pairs) <= set(Y.pairs):
        raise ValueError("Y1 must be a subset of Y")
    big = sign_modules(crystal, decomp, Y)
    small = sign_modules(crystal, decomp, Y1)
    if not Y1.pairs:
        return small.O_minus.rank == 0
    # the block lattice is saturated, so intersecting with it is the same
    # as intersecting with its rational span
    _, Vm1 = signed_block_lattices(decomp, Y1)
    cut = intersect(big.O_minus, Vm1)
    return cut.equals(small.O_minus)
