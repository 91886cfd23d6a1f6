"""Command-line front end.

Subcommands
-----------
classify   reduce every block of one or more pair documents
generate   write scrambled instances of a catalog family
verify     decide whether two pairs are unitarily similar
atlas      list the catalog
decompose  orthogonal block decomposition with structural checks

Exit codes: 0 success, 2 validation error, 3 classification-scope error,
4 inconclusive verification.
"""

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import catalog, oracle
from .classify import CLASSIFIED, TRIVIAL, classify
from .core_linalg import OperatorPair, TolerancePolicy
from .decomposition import full_decomposition, verify_proposition1
from .errors import ClassificationError, KreinCanonError, NotHNormal, ValidationError

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SCOPE = 3
EXIT_INCONCLUSIVE = 4

PAIR_SCHEMA_ID = "krein-canon/pair-document/v1"
REPORT_SCHEMA_ID = "krein-canon/report/v1"
VERIFY_SCHEMA_ID = "krein-canon/verify/v1"


def load_schema(name):
    """JSON schema shipped in ``krein_canon/schemas``."""
    text = resources.files("krein_canon").joinpath("schemas", name).read_text()
    return json.loads(text)


def _matrix(rows):
    return np.asarray(rows, dtype=np.float64).tolist()


def read_pair_document(path, tol=None):
    """Parse and validate a pair document.

    Returns
    -------
    pair : OperatorPair
    metadata : dict
    """
    try:
        text = sys.stdin.read() if str(path) == "-" else Path(path).read_text()
        doc = json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"{path}: cannot read pair document ({exc})") from None
    try:
        jsonschema.validate(doc, load_schema("pair_document.v1.json"))
    except jsonschema.ValidationError as exc:
        raise ValidationError(f"{path}: {exc.message}") from None
    N = np.asarray(doc["N"], dtype=np.float64) if _rectangular(doc["N"]) else None
    H = np.asarray(doc["H"], dtype=np.float64) if _rectangular(doc["H"]) else None
    if N is None or H is None:
        raise ValidationError(f"{path}: N and H must be rectangular arrays")
    pair = OperatorPair(N, H, tol=tol or TolerancePolicy.from_env())
    return pair, doc.get("metadata", {})


def _rectangular(rows):
    return len({len(r) for r in rows}) == 1


def pair_document(N, H, metadata=None):
    doc = {"schema": PAIR_SCHEMA_ID, "N": _matrix(N), "H": _matrix(H)}
    if metadata:
        doc["metadata"] = metadata
    return doc


def _tol_from_args(args):
    return TolerancePolicy.from_env(
        residual_abs=getattr(args, "tol", None),
        eig_cluster_rel=getattr(args, "eig_tol", None),
        rank_rel=getattr(args, "rank_tol", None),
    )


def _theorem_label(fam):
    return f"Theorem {fam.rank}, form ({fam.form})"


def _fmt_params(params):
    return ", ".join(f"{k}={v:g}" if isinstance(v, float) else f"{k}={v}" for k, v in params.items())


# ---------------------------------------------------------------------------
# classify


def classify_document(path, tol, emit_transform=False, allow_deferred=True):
    """Report dictionary for one input file (used by the worker pool)."""
    pair, meta = read_pair_document(path, tol)
    rep = classify(pair, tol, allow_deferred=allow_deferred)
    out = {"schema": REPORT_SCHEMA_ID, "input": str(path)}
    out.update(rep.to_dict(emit_transform))
    if meta:
        out["metadata"] = meta
    if emit_transform and rep.status == "ok":
        Nc, Hc = rep.canonical_pair()
        if rep.flipped:
            # express the canonical Gram matrix against the input's own H
            Hc = -Hc
        out["transform"] = rep.transform().tolist()
        out["canonical_pair"] = {"N": Nc.tolist(), "H": Hc.tolist()}
    return out


def _safe_classify(job):
    path, tol, emit, allow = job
    try:
        return classify_document(path, tol, emit, allow), None
    except NotHNormal as exc:
        return None, (EXIT_VALIDATION, f"{path}: {exc} (commutator residual {exc.residual:.3e})")
    except ValidationError as exc:
        return None, (EXIT_VALIDATION, str(exc))
    except KreinCanonError as exc:
        return None, (EXIT_SCOPE, f"{path}: {exc}")


def format_report_text(rep):
    lines = [f"{rep['input']}: n={rep['n']} signature={tuple(rep['signature'])} status={rep['status']}"]
    if rep["h_negated"]:
        lines.append("  H was negated so that v_minus <= v_plus")
    for k, b in enumerate(rep["blocks"]):
        head = f"  block {k}: dim={b['dim']} rank={b['rank']} class={b['eigenvalue_class']}"
        if b["status"] == CLASSIFIED:
            fam = catalog.get_family(b["family"])
            lines.append(f"{head} -> {b['family']} ({_theorem_label(fam)}) [{b['method']}]")
            lines.append(f"      params: {_fmt_params(b['params'])}")
            lines.append(f"      residual: {b['residual']:.3e}")
            for w in b.get("warnings", []):
                lines.append(f"      warning: {w}")
        else:
            lines.append(f"{head} -> {b['status']}: {b.get('message', '')}")
    if rep["certificate_residual"] is not None:
        lines.append(f"  certificate residual: {rep['certificate_residual']:.3e}")
    for w in rep["warnings"]:
        lines.append(f"  warning: {w}")
    return "\n".join(lines)


def cmd_classify(args):
    tol = _tol_from_args(args)
    jobs = [(p, tol, args.emit_transform, not args.no_fit) for p in args.inputs]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            results = list(ex.map(_safe_classify, jobs))
    else:
        results = [_safe_classify(j) for j in jobs]
    code = EXIT_OK
    reports = []
    for rep, err in results:
        if err is not None:
            code = max(code, err[0])
            print(f"error: {err[1]}", file=sys.stderr)
            continue
        reports.append(rep)
        if {b["status"] for b in rep["blocks"]} - {CLASSIFIED, TRIVIAL}:
            code = max(code, EXIT_SCOPE)
    if args.format == "json":
        payload = reports[0] if len(args.inputs) == 1 and reports else reports
        _write(args.output, json.dumps(payload, indent=2))
    elif reports:
        _write(args.output, "\n".join(format_report_text(r) for r in reports))
    return code


# ---------------------------------------------------------------------------
# generate


def parse_params(text):
    """``'{"lambda": 0}'`` or ``'lambda=0,z=1'`` into a dictionary."""
    text = text.strip()
    if not text:
        return {}
    if text.startswith("{"):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"--params is not valid JSON ({exc})") from None
    out = {}
    for item in text.split(","):
        key, sep, val = item.partition("=")
        if not sep:
            raise ValidationError(f"--params item {item!r} is not name=value")
        try:
            out[key.strip()] = float(val)
        except ValueError:
            raise ValidationError(f"--params value {val!r} is not a number") from None
    return out


def cmd_generate(args):
    fam = catalog.get_family(args.family)
    if args.params:
        params = parse_params(args.params)
    else:
        params = catalog.sample_params(fam, np.random.default_rng(args.seed))
    form = catalog.CanonicalForm(fam.id, params)
    base = catalog.construct(fam.id, form.params)
    spec = oracle.ScrambleSpec(seed=args.seed, magnitude=args.magnitude, count=args.count)
    docs = []
    for i, (pair, _) in enumerate(oracle.scramble_with_transforms(base, spec)):
        meta = {"label": f"{fam.id} scrambled", "seed": args.seed, "index": i,
                "magnitude": args.magnitude, "expected_family": fam.id,
                "expected_params": dict(form.params)}
        docs.append(pair_document(pair.N, pair.H, meta))
    out = args.output
    if out == "-":
        print(json.dumps(docs[0] if len(docs) == 1 else docs, indent=2))
    elif len(docs) == 1 and out.endswith(".json"):
        Path(out).write_text(json.dumps(docs[0], indent=2))
    else:
        d = Path(out)
        d.mkdir(parents=True, exist_ok=True)
        for i, doc in enumerate(docs):
            (d / f"{fam.id}-s{args.seed}-{i:03d}.json").write_text(json.dumps(doc, indent=2))
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


def cmd_verify(args):
    tol = _tol_from_args(args)
    a, _ = read_pair_document(args.first, tol)
    b, _ = read_pair_document(args.second, tol)
    if a.flipped != b.flipped:
        # the input Gram matrices have different inertia
        r = oracle.SimilarityResult("invariant-mismatch", field="signature")
    else:
        r = oracle.similarity_solve(a, b, tol, starts=args.starts, seed=args.seed)
    status = {"similar": "similar", "invariant-mismatch": "not-similar"}.get(r.status, "inconclusive")
    detail = "certificate" if r.status == "similar" else r.status
    out = {"schema": VERIFY_SCHEMA_ID, "status": status, "detail": detail, "field": r.field,
           "residual": None if r.residual is None or not np.isfinite(r.residual) else float(r.residual)}
    if r.status == "similar" and args.emit_transform:
        out["T"] = r.T.tolist()
    if args.format == "json":
        _write(args.output, json.dumps(out, indent=2))
    else:
        line = f"{status} ({detail}"
        line += f", field {r.field})" if r.field else ")"
        if out["residual"] is not None and status == "similar":
            line += f" residual {out['residual']:.3e}"
        _write(args.output, line)
    return EXIT_INCONCLUSIVE if status == "inconclusive" else EXIT_OK


# ---------------------------------------------------------------------------
# atlas


def cmd_atlas(args):
    rows = catalog.atlas(rank=args.rank, n=args.n)
    if args.format == "json":
        _write(args.output, json.dumps(rows, indent=2))
        return EXIT_OK
    labels = {}
    for r in rows:
        fam = catalog.get_family(r["family"])
        labels[r["family"]] = _theorem_label(fam) + f", H ({fam.h_form})"
    w = max([len("label")] + [len(v) for v in labels.values()])
    lines = [f"{'family':<9} {'label':<{w}} {'n':>2} {'rank':>4} {'class':>5}  {'reduction':<12} parameters"]
    for r in rows:
        dom = "; ".join(r["domain"])
        params = ", ".join(r["params"]) + (f"  [{dom}]" if dom else "")
        lines.append(f"{r['family']:<9} {labels[r['family']]:<{w}} "
                     f"{r['n']:>2} {r['rank']:>4} {r['spectrum_class']:>5}  {r['reduction']:<12} {params}")
    _write(args.output, "\n".join(lines))
    return EXIT_OK


# ---------------------------------------------------------------------------
# decompose


def decompose_document(path, tol, emit_basis=False):
    pair, meta = read_pair_document(path, tol)
    dec = full_decomposition(pair, tol)
    prop = verify_proposition1(pair, dec.blocks, tol, spectrum=dec.spectrum)
    blocks = []
    for b in dec.blocks:
        item = {"dim": b.dim, "rank": b.rank, "kind": b.kind, "indices": list(b.indices),
                "eigenvalue_class": b.eigenvalue_class, "signs": [int(s) for s in b.signs]}
        if emit_basis:
            item["basis"] = b.basis.vectors.tolist()
        blocks.append(item)
    spec = dec.spectrum
    return {
        "input": str(path),
        "n": pair.n,
        "signature": list(pair.signature),
        "spectrum": {"real": [float(x) for x in spec.real_eigs], "real_mults": list(spec.real_mults),
                     "complex": [[float(a), float(b)] for a, b in spec.complex_pairs],
                     "complex_mults": list(spec.pair_mults)},
        "q_dims": {f"{i},{j}": q.dim for (i, j), q in dec.q.items() if q.dim},
        "blocks": blocks,
        "structural_checks": prop.to_dict(),
        "warnings": list(dec.warnings),
    }


def cmd_decompose(args):
    tol = _tol_from_args(args)
    rep = decompose_document(args.input, tol, args.emit_basis)
    if args.format == "json":
        _write(args.output, json.dumps(rep, indent=2))
        return EXIT_OK
    lines = [f"{rep['input']}: n={rep['n']} signature={tuple(rep['signature'])}"]
    for k, b in enumerate(rep["blocks"]):
        lines.append(f"  block {k}: dim={b['dim']} rank={b['rank']} class={b['eigenvalue_class']} "
                     f"kind={b['kind']} signs={b['signs']}")
    chk = rep["structural_checks"]
    lines.append(f"  structural checks: {'pass' if chk['passed'] else 'FAIL'}")
    for name, v in chk["properties"].items():
        lines.append(f"    {name:<24} {v['residual']:.3e}")
    for w in rep["warnings"]:
        lines.append(f"  warning: {w}")
    _write(args.output, "\n".join(lines))
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def _write(path, text):
    if path in (None, "-"):
        print(text)
    else:
        Path(path).write_text(text + "\n")


def _add_tol(p):
    p.add_argument("--tol", type=float, help="absolute residual tolerance (env KREIN_CANON_TOL)")
    p.add_argument("--eig-tol", type=float, help="relative eigenvalue clustering gap")
    p.add_argument("--rank-tol", type=float, help="relative singular-value cutoff")


def build_parser():
    ap = argparse.ArgumentParser(prog="krein-canon", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="classify pair documents")
    p.add_argument("inputs", nargs="+", help="pair document paths ('-' for stdin)")
    _add_tol(p)
    p.add_argument("--emit-transform", action="store_true", help="include reducing transforms")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--no-fit", action="store_true", help="skip template fitting for deferred clauses")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for several inputs")
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("generate", help="write scrambled instances of a family")
    p.add_argument("--family", required=True)
    p.add_argument("--params", default="", help="JSON object or name=value list; sampled if omitted")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--magnitude", type=float, default=1.0)
    p.add_argument("-o", "--output", default="-", help="file (count 1), directory, or '-'")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("verify", help="test two pairs for unitary similarity")
    p.add_argument("first")
    p.add_argument("second")
    _add_tol(p)
    p.add_argument("--starts", type=int, default=40)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--emit-transform", action="store_true")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("atlas", help="list catalog families")
    p.add_argument("--rank", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_atlas)

    p = sub.add_parser("decompose", help="orthogonal block decomposition")
    p.add_argument("input")
    _add_tol(p)
    p.add_argument("--emit-basis", action="store_true")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_decompose)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NotHNormal as exc:
        print(f"error: {exc} (commutator residual {exc.residual:.3e})", file=sys.stderr)
        return EXIT_VALIDATION
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ClassificationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCOPE
    except KreinCanonError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCOPE


if __name__ == "__main__":
    sys.exit(main())
