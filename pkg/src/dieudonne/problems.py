"""Problem files, the analysis orchestrator, and report emission.

A problem file is a JSON document (exact grammar in the README): integers
in decimal, Witt scalars as coefficient arrays, rationals as "a/b"
strings.  Reports are deterministic: analyses run in name order and the
structured output is canonical JSON, so identical inputs give
byte-identical output.
"""

from __future__ import annotations

import json
import random
from fractions import Fraction

from . import __version__
from .core import (TangentSpace, check_axioms, codim_of_dieudonne,
                   hodge_splitting, largest_sub_dieudonne, lie_element,
                   nu_image)
from .deformation import (DeformationBasis, correction_factor,
                          kodaira_spencer_image, prepare_trivializer,
                          select_deformation_basis, solve_connection,
                          trivialize_at_point, verify_horizontality)
from .errors import (DieudonneError, ParseError, VerificationMismatch)
from .isocrystal import (FIsocrystal, dim_codim, end_decompose,
                         newton_slopes, slope_split)
from .lattices import Lattice, SemilinearMap
from .signs import (SlopePairSet, max_square_zero_size, quasi_factor_codims,
                    sign_modules, slice_monotone, slice_report, strings)
from .strata import (group_custom, group_full_gl, group_symplectic,
                     polarized_dim, strata_dims, traverso_dimension)
from .witt import make_context

ANALYSES = ["slopes", "decompose", "ominus", "axioms", "dual", "slices",
            "connection", "trivialize", "correction", "strata", "traverso",
            "polarized"]


# ---------------------------------------------------------------------------
# problem specifications


class ProblemSpec:
    FIELDS = ("name", "p", "n", "precision", "degree", "rank", "phi_matrix",
              "phi_denominator", "hodge_f1", "symplectic_gram", "group",
              "lattice_e", "lie_element_t", "slope_pairs",
              "deformation_basis", "points")

    def __init__(self, **kw):
        for f in self.FIELDS:
            setattr(self, f, kw.get(f))

    def as_dict(self):
        out = {}
        for f in self.FIELDS:
            v = getattr(self, f)
            if v is not None:
                out[f] = v
        return out

    def __eq__(self, other):
        return isinstance(other, ProblemSpec) and \
            self.as_dict() == other.as_dict()

    def __repr__(self):
        return f"ProblemSpec({self.name!r}, p={self.p}, rank={self.rank})"


def _expect(cond, field, msg):
    if not cond:
        raise ParseError(f"field '{field}': {msg}")


def _check_entry(e, n, field):
    if isinstance(e, int):
        return e
    if isinstance(e, list) and all(isinstance(x, int) for x in e):
        _expect(len(e) <= n, field,
                f"coefficient array longer than the residue degree {n}")
        return e
    raise ParseError(f"field '{field}': entries must be integers or "
                     "integer coefficient arrays")


def _check_matrix(m, r, n, field, rows=None):
    rows = r if rows is None else rows
    _expect(isinstance(m, list) and len(m) == rows, field,
            f"expected {rows} rows")
    for row in m:
        _expect(isinstance(row, list) and len(row) == r, field,
                f"rows must have {r} entries (matrix must be square "
                "of the stated rank)" if rows == r else
                f"rows must have {r} entries")
        for e in row:
            _check_entry(e, n, field)
    return m


def parse_dict(doc, name=None) -> ProblemSpec:
    if not isinstance(doc, dict):
        raise ParseError("problem document must be a JSON object")
    unknown = set(doc) - set(ProblemSpec.FIELDS)
    _expect(not unknown, ",".join(sorted(unknown)), "unknown field(s)")
    for field in ("p", "rank", "phi_matrix"):
        _expect(field in doc, field, "required field missing")
    p = doc["p"]
    _expect(isinstance(p, int) and p >= 2, "p", "must be an integer >= 2")
    n = doc.get("n", 1)
    _expect(isinstance(n, int) and n >= 1, "n", "must be a positive integer")
    N = doc.get("precision", 40)
    _expect(isinstance(N, int) and N >= 2, "precision",
            "must be an integer >= 2")
    degree = doc.get("degree", 2 * (p - 1) + 1)
    _expect(isinstance(degree, int) and degree >= 1, "degree",
            "must be a positive integer")
    r = doc["rank"]
    _expect(isinstance(r, int) and r >= 1, "rank",
            "must be a positive integer")
    phi = _check_matrix(doc["phi_matrix"], r, n, "phi_matrix")
    spec = ProblemSpec(
        name=doc.get("name", name or "unnamed"),
        p=p, n=n, precision=N, degree=degree, rank=r, phi_matrix=phi,
        phi_denominator=doc.get("phi_denominator", 0),
    )
    if "hodge_f1" in doc:
        h = doc["hodge_f1"]
        if isinstance(h, list) and all(isinstance(i, int) for i in h):
            _expect(all(0 <= i < r for i in h), "hodge_f1",
                    "column indices out of range")
        elif isinstance(h, dict) and "columns" in h:
            for col in h["columns"]:
                _expect(isinstance(col, list) and len(col) == r, "hodge_f1",
                        "explicit columns must have length rank")
                for e in col:
                    _check_entry(e, n, "hodge_f1")
        else:
            raise ParseError("field 'hodge_f1': must be a list of column "
                             "indices or {\"columns\": [...]}")
        spec.hodge_f1 = h
    if "symplectic_gram" in doc:
        spec.symplectic_gram = _check_matrix(doc["symplectic_gram"], r, n,
                                             "symplectic_gram")
    if "group" in doc:
        g = doc["group"]
        _expect(isinstance(g, dict) and g.get("kind") in
                ("full-gl", "symplectic", "custom"), "group",
                "kind must be full-gl, symplectic, or custom")
        if g["kind"] == "custom":
            _expect("basis" in g, "group", "custom groups need a basis")
            for mat in g["basis"]:
                _check_matrix(mat, r, n, "group.basis")
        spec.group = g
    if "lattice_e" in doc:
        for mat in doc["lattice_e"]:
            _check_matrix(mat, r, n, "lattice_e")
        spec.lattice_e = doc["lattice_e"]
    if "lie_element_t" in doc:
        t = doc["lie_element_t"]
        _expect(isinstance(t, dict) and "matrix" in t, "lie_element_t",
                "must be {matrix, denominator?}")
        _check_matrix(t["matrix"], r, n, "lie_element_t")
        spec.lie_element_t = t
    if "slope_pairs" in doc:
        for pair in doc["slope_pairs"]:
            _expect(isinstance(pair, list) and len(pair) == 2, "slope_pairs",
                    "entries must be [a, b] slope pairs")
            for s in pair:
                _parse_fraction(s)
        spec.slope_pairs = doc["slope_pairs"]
    if "deformation_basis" in doc:
        for mat in doc["deformation_basis"]:
            _check_matrix(mat, r, n, "deformation_basis")
        spec.deformation_basis = doc["deformation_basis"]
    if "points" in doc:
        _expect(isinstance(doc["points"], list), "points",
                "must be a list of coordinate tuples")
        spec.points = doc["points"]
    return spec


def _parse_fraction(s):
    try:
        if isinstance(s, int):
            return Fraction(s)
        if isinstance(s, str):
            return Fraction(s)
    except (ValueError, ZeroDivisionError):
        pass
    raise ParseError(f"field 'slope_pairs': bad rational {s!r}")


def parse_file(path) -> ProblemSpec:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path} is not valid JSON: line {exc.lineno}, "
                         f"column {exc.colno}")
    return parse_dict(doc)


def emit_spec(spec: ProblemSpec) -> bytes:
    """Canonical structured form of a problem (stable byte-for-byte)."""
    return (json.dumps(spec.as_dict(), sort_keys=True, indent=1,
                       separators=(",", ": ")) + "\n").encode()


# ---------------------------------------------------------------------------
# the session: shared computed state


class Session:
    """Lazy caches for the chain context -> crystal -> slopes ->
    decomposition -> splitting used by all analyses."""

    def __init__(self, spec: ProblemSpec, seed: int = 0):
        self.spec = spec
        self.seed = seed
        self._cache = {}

    def ctx(self):
        if "ctx" not in self._cache:
            self._cache["ctx"] = make_context(self.spec.p, self.spec.n,
                                              self.spec.precision)
        return self._cache["ctx"]

    def crystal(self) -> FIsocrystal:
        if "crystal" not in self._cache:
            ctx = self.ctx()
            rows = [[ctx.scalar(e) for e in row]
                    for row in self.spec.phi_matrix]
            self._cache["crystal"] = FIsocrystal(
                ctx, SemilinearMap(ctx, rows, twist=1,
                                   denominator=self.spec.phi_denominator
                                   or 0))
        return self._cache["crystal"]

    def slope_data(self):
        if "slopes" not in self._cache:
            self._cache["slopes"] = slope_split(self.crystal())
        return self._cache["slopes"]

    def decomp(self):
        if "decomp" not in self._cache:
            self._cache["decomp"] = end_decompose(self.crystal(),
                                                  self.slope_data())
        return self._cache["decomp"]

    def tangent(self):
        if "tangent" not in self._cache:
            self._cache["tangent"] = TangentSpace(self.crystal())
        return self._cache["tangent"]

    def o_minus(self):
        if "o_minus" not in self._cache:
            self._cache["o_minus"] = largest_sub_dieudonne(
                self.decomp().V_minus, self.crystal(), mode="negative")
        return self._cache["o_minus"]

    def split(self):
        if "split" not in self._cache:
            spec = self.spec
            ctx = self.ctx()
            r = spec.rank
            if spec.hodge_f1 is None:
                from .core import hodge_splitting_from_kernel
                self._cache["split"] = hodge_splitting_from_kernel(
                    self.crystal())
            elif isinstance(spec.hodge_f1, dict):
                cols = [[ctx.scalar(e) for e in col]
                        for col in spec.hodge_f1["columns"]]
                self._cache["split"] = hodge_splitting(self.crystal(), cols)
            else:
                cols = []
                for i in spec.hodge_f1:
                    col = [ctx.zero] * r
                    col[i] = ctx.one
                    cols.append(col)
                self._cache["split"] = hodge_splitting(self.crystal(), cols)
        return self._cache["split"]

    def lattice_e(self):
        """The deformation lattice: explicit when given; else the negative
        stable lattice of the requested slope-pair set (square-zero pair
        sets give square-zero lattices); else the full negative one."""
        if "lattice_e" not in self._cache:
            if self.spec.lattice_e is None:
                if self.spec.slope_pairs is not None:
                    mods = sign_modules(self.crystal(), self.decomp(),
                                        self.pair_set())
                    self._cache["lattice_e"] = mods.O_minus
                else:
                    self._cache["lattice_e"] = self.o_minus()
            else:
                ctx = self.ctx()
                r = self.spec.rank
                cols = []
                for mat in self.spec.lattice_e:
                    cols.append([ctx.scalar(mat[i][j]) for i in range(r)
                                 for j in range(r)])
                self._cache["lattice_e"] = Lattice.from_columns(
                    ctx, r * r, cols)
        return self._cache["lattice_e"]

    def pair_set(self) -> SlopePairSet:
        slopes = self.slope_data().slope_list
        if self.spec.slope_pairs is None:
            return SlopePairSet.full(slopes)
        pairs = [(_parse_fraction(a), _parse_fraction(b))
                 for (a, b) in self.spec.slope_pairs]
        return SlopePairSet(pairs, slopes)

    def deformation_basis(self) -> DeformationBasis:
        if "defbasis" not in self._cache:
            if self.spec.deformation_basis is not None:
                ctx = self.ctx()
                r = self.spec.rank
                vecs = [[ctx.scalar(mat[i][j]) for i in range(r)
                         for j in range(r)]
                        for mat in self.spec.deformation_basis]
                self._cache["defbasis"] = DeformationBasis(
                    vecs, self.lattice_e())
            else:
                self._cache["defbasis"] = select_deformation_basis(
                    self.lattice_e(), self.tangent())
        return self._cache["defbasis"]

    def rng(self):
        return random.Random(self.seed)


def _frac(x) -> str:
    f = Fraction(x)
    return f"{f.numerator}/{f.denominator}" if f.denominator != 1 \
        else str(f.numerator)


# ---------------------------------------------------------------------------
# analyses


def run_slopes(sess: Session) -> dict:
    X = sess.crystal()
    slopes = newton_slopes(X)
    c, d = dim_codim(X) if X.is_dieudonne() else (None, None)
    out = {
        "slopes": [[_frac(a), m] for (a, m) in slopes],
        "isoclinic": len(slopes) == 1,
        "ok": True,
    }
    if c is not None:
        out["codimension"] = c
        out["dimension"] = d
        total = sum(Fraction(a) * m for (a, m) in slopes)
        out["newton_endpoint_matches_dimension"] = (total == d)
        out["ok"] = out["newton_endpoint_matches_dimension"]
    return out


def run_decompose(sess: Session) -> dict:
    S = sess.slope_data()
    E = sess.decomp()
    comp = {_frac(a): lat.rank for a, lat in S.components.items()}
    return {
        "component_ranks": comp,
        "module_splits_integrally": S.is_split,
        "V_plus_rank": E.V_plus.rank,
        "V_minus_rank": E.V_minus.rank,
        "projector_denominators": {
            _frac(a): pr.denominator for a, pr in S.projectors.items()},
        "ok": True,
    }


def run_ominus(sess: Session) -> dict:
    X = sess.crystal()
    O = sess.o_minus()
    T = sess.tangent()
    dim = nu_image(O, T)[0] if O.rank else 0
    out = {
        "O_minus_rank": O.rank,
        "tangent_dimension": dim,
        "loss": O.loss,
        "ok": True,
    }
    if O.rank:
        out["codimension"] = codim_of_dieudonne(O, X)
        out["ok"] = (out["codimension"] == dim)
    Elat = sess.lattice_e()
    if sess.spec.lattice_e is not None:
        out["E_rank"] = Elat.rank
        out["E_tangent_dimension"] = nu_image(Elat, T)[0]
    return out


def run_axioms(sess: Session) -> dict:
    X = sess.crystal()
    ctx = sess.ctx()
    E = sess.lattice_e()
    V_minus = sess.decomp().V_minus
    split = None
    try:
        split = sess.split()
    except DieudonneError:
        split = None
    report = check_axioms(E, X, V_minus, split)
    out = report.as_dict()
    out["ok"] = report.all_pass()
    if sess.spec.lie_element_t is not None:
        t_doc = sess.spec.lie_element_t
        rows = [[ctx.scalar(e) for e in row] for row in t_doc["matrix"]]
        t = SemilinearMap(ctx, rows,
                          denominator=t_doc.get("denominator", 0))
        try:
            lie_element(E, sess.slope_data(), user_t=t)
            out["lie_element_valid"] = True
        except DieudonneError as exc:
            out["lie_element_valid"] = False
            out["lie_element_error"] = str(exc)
            out["ok"] = False
    return out


def run_dual(sess: Session) -> dict:
    X = sess.crystal()
    E = sess.decomp()
    Y = sess.pair_set()
    if not Y.pairs:
        return {"pairs": [], "ok": True, "note": "no slope pairs"}
    mods = sign_modules(X, E, Y)
    return {
        "pairs": [[_frac(a), _frac(b)] for (a, b) in Y.pairs],
        "V_plus_rank": mods.V_plus.rank,
        "V_minus_rank": mods.V_minus.rank,
        "O_plus_rank": mods.O_plus.rank,
        "O_minus_rank": mods.O_minus.rank,
        "O_plus_minus_rank": mods.O_plus_minus.rank,
        "O_minus_plus_rank": mods.O_minus_plus.rank,
        "c_minus": mods.codims.get("c_minus", 0),
        "duality_crosschecks_passed": True,
        "losses": {"O_minus": mods.O_minus.loss,
                   "O_plus_minus": mods.O_plus_minus.loss},
        "ok": True,
    }


def run_slices(sess: Session) -> dict:
    X = sess.crystal()
    S = sess.slope_data()
    E = sess.decomp()
    T = sess.tangent()
    Y = sess.pair_set()
    out = {"pairs": [[_frac(a), _frac(b)] for (a, b) in Y.pairs]}
    if not Y.pairs:
        out.update({"square_zero": True, "ok": True})
        return out
    report, _ = slice_report(X, S, E, Y, tangent=T)
    out.update(report)
    lower, upper = strings(S)
    out["lower_strings"] = {
        _frac(a): len(v) for a, v in lower.items()}
    out["upper_strings"] = {
        _frac(a): len(v) for a, v in upper.items()}
    m = len(S.slope_list)
    if m >= 2:
        out["chain_sizes"] = [lvl * (m - lvl) for lvl in range(1, m)]
        out["max_square_zero_size"] = max_square_zero_size(m)
    monotone_ok = True
    if len(Y.pairs) <= 3:
        for Y1 in Y.subsets():
            if not slice_monotone(X, E, Y, Y1):
                monotone_ok = False
    out["subset_monotonicity"] = monotone_ok
    out["ok"] = monotone_ok and (report.get("square_vanishes", True)
                                 if report["square_zero"] else True)
    return out


def run_connection(sess: Session) -> dict:
    X = sess.crystal()
    E = sess.lattice_e()
    B = sess.deformation_basis()
    conn = solve_connection(X, E, B, sess.spec.degree)
    series = {}
    for (l, i), s in sorted(conn.w.items()):
        if not s.is_zero():
            series[f"w[{l},{i}]"] = repr(s)
    out = {
        "variables": B.n,
        "series": series,
        "ok": True,
    }
    try:
        split = sess.split()
        hor = verify_horizontality(X, conn, split)
        out["horizontality"] = hor
        out["ok"] = hor["vanishes"]
    except DieudonneError as exc:
        out["horizontality"] = f"skipped: {exc}"
    dim, _ = kodaira_spencer_image(conn, sess.tangent())
    out["kodaira_spencer_dimension"] = dim
    return out


def run_trivialize(sess: Session, n_points: int = 3) -> dict:
    X = sess.crystal()
    E = sess.lattice_e()
    B = sess.deformation_basis()
    slopes = newton_slopes(X)
    if len(slopes) == 1:
        return {"ok": True, "note": "isoclinic module: nothing to do"}
    ctx = sess.ctx()
    rng = sess.rng()
    points = sess.spec.points
    if points is None:
        points = [[tuple(rng.randrange(ctx.p) for _ in range(ctx.n))
                   for _ in range(B.n)] for _ in range(n_points)]
    results = []
    ok = True
    ws = prepare_trivializer(X, E, B)
    for point in points:
        res = trivialize_at_point(X, E, B, point, workspace=ws)
        results.append({"steps": res["steps"],
                        "verified_modulus": res["verified_modulus"]})
        if res["verified_modulus"] < ctx.N - 4:
            ok = False
    return {"points": len(points), "results": results, "ok": ok}


def run_correction(sess: Session) -> dict:
    X = sess.crystal()
    ctx = sess.ctx()
    E = sess.lattice_e()
    B = sess.deformation_basis()
    conn = solve_connection(X, E, B, sess.spec.degree)
    z = [ctx.scalar(ctx.p)] * B.n
    out = correction_factor(X, conn, z)
    return {
        "unit_mod_p": out["unit_mod_p"],
        "defect_in_E_mod_p2": out["defect_in_E_mod_p2"],
        "y_valuations": out["y_valuations"],
        "ok": out["unit_mod_p"] and out["defect_in_E_mod_p2"],
    }


def run_strata(sess: Session) -> dict:
    spec = sess.spec
    X = sess.crystal()
    ctx = sess.ctx()
    if spec.group is None or spec.group.get("kind") == "full-gl":
        gd = group_full_gl(X)
    elif spec.group["kind"] == "symplectic":
        if spec.symplectic_gram is None:
            raise ParseError("symplectic group data needs symplectic_gram")
        gd = group_symplectic(
            X, [[ctx.scalar(e) for e in row]
                for row in spec.symplectic_gram])
    else:
        r = spec.rank
        basis = [[ctx.scalar(mat[i][j]) for i in range(r) for j in range(r)]
                 for mat in spec.group["basis"]]
        gd = group_custom(X, basis)
    rep = strata_dims(gd, X, sess.slope_data(), sess.decomp(), sess.split(),
                      sess.tangent())
    out = rep.as_dict()
    out["kind"] = gd.kind
    out["ok"] = rep.fact_a_consistent and rep.tangent_dim >= rep.c_minus_G
    return out


def run_traverso(sess: Session) -> dict:
    lat, closed = traverso_dimension(sess.crystal(), sess.slope_data(),
                                     sess.decomp(), sess.tangent())
    table, total = quasi_factor_codims(sess.crystal(), sess.slope_data(),
                                       sess.decomp(), verify=True)
    return {
        "tangent_dimension": lat,
        "closed_form": closed,
        "per_pair": {f"{_frac(a)},{_frac(b)}": v
                     for (a, b), v in sorted(table.items())},
        "pair_sum": total,
        "ok": lat == closed == total,
    }


def run_polarized(sess: Session) -> dict:
    spec = sess.spec
    if spec.symplectic_gram is None:
        return {"ok": True, "note": "no polarization supplied"}
    ctx = sess.ctx()
    gram = [[ctx.scalar(e) for e in row] for row in spec.symplectic_gram]
    lat, closed = polarized_dim(sess.crystal(), sess.slope_data(),
                                sess.decomp(), sess.split(), gram,
                                sess.tangent())
    return {
        "lattice_dimension": lat,
        "closed_form": closed,
        "ok": lat == closed,
    }


RUNNERS = {
    "slopes": run_slopes,
    "decompose": run_decompose,
    "ominus": run_ominus,
    "axioms": run_axioms,
    "dual": run_dual,
    "slices": run_slices,
    "connection": run_connection,
    "trivialize": run_trivialize,
    "correction": run_correction,
    "strata": run_strata,
    "traverso": run_traverso,
    "polarized": run_polarized,
}


def run(spec: ProblemSpec, analyses, seed: int = 0) -> dict:
    """Dispatch the requested analyses (deterministic order) and collect
    the report."""
    sess = Session(spec, seed=seed)
    report = {
        "problem": spec.name,
        "parameters": {"p": spec.p, "n": spec.n,
                       "precision": spec.precision,
                       "degree": spec.degree, "rank": spec.rank},
        "version": __version__,
        "seed": seed,
        "analyses": {},
    }
    ok = True
    for name in sorted(set(analyses)):
        if name not in RUNNERS:
            raise ParseError(f"unknown analysis '{name}'")
        try:
            result = RUNNERS[name](sess)
        except VerificationMismatch as exc:
            result = {"ok": False, "verification_mismatch": str(exc)}
        except DieudonneError as exc:
            result = {"ok": False,
                      "error": f"{type(exc).__name__}: {exc}"}
        report["analyses"][name] = result
        ok = ok and result.get("ok", False)
    report["all_ok"] = ok
    return report


def emit(report: dict, fmt: str = "text") -> bytes:
    """Stable rendering: canonical JSON, or a line-oriented text view."""
    if fmt == "structured":
        return (json.dumps(report, sort_keys=True, indent=1,
                           separators=(",", ": "), default=str)
                + "\n").encode()
    lines = [f"problem: {report['problem']}"]
    par = report["parameters"]
    lines.append(f"parameters: p={par['p']} n={par['n']} "
                 f"precision={par['precision']} degree={par['degree']} "
                 f"rank={par['rank']}")
    for name in sorted(report["analyses"]):
        res = report["analyses"][name]
        status = "pass" if res.get("ok") else "FAIL"
        lines.append(f"[{status}] {name}")
        for key in sorted(res):
            if key == "ok":
                continue
            lines.append(f"    {key}: {_render(res[key])}")
    lines.append(f"all_ok: {report['all_ok']}")
    return ("\n".join(lines) + "\n").encode()


def _render(v):
    if isinstance(v, dict):
        inner = ", ".join(f"{k}={_render(x)}" for k, x in sorted(v.items()))
        return "{" + inner + "}"
    if isinstance(v, list):
        return "[" + ", ".join(_render(x) for x in v) + "]"
    return str(v)
