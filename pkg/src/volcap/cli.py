"""Batch front-end: read a problem spec, run analyses, emit JSON/CSV artifacts.

The spec file is JSON:

    {
      "z": "z.json",                  // MatrixFunction file, required unless
                                      // only "model" is requested
      "h": "h.json",                  // optional k-by-k symmetric term
      "analyses": ["capacity", "spectrum", "fit", "factorize", "bound",
                   "conditions", "realize", "model"],
      "n": 256, "tol": 1e-10, "j_max": 8,
      "window": [21, 42],             // optional, defaults to [n/12, n/6]
      "crosscheck_rtol": 0.05,
      "model": {"mu": 1.0, "k": 1, "length": 1.0, "parity": "even",
                "count": 64}
    }

One artifact per analysis lands in the output directory, plus a summary with
cross-checks (predicted vs fitted value, bound vs fit).  Exit codes: 0 all
analyses done and cross-checks pass, 2 cross-check failure, 1 error.  Output
is deterministic: artifacts carry no timestamps and identical inputs produce
byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

from .matfun import MatrixFunction, SymplecticForm
from .capacity import predict_capacity
from .galerkin import (QuadraticFormSpec, SubspaceSelector, assemble, restrict,
                       spectrum, skew_factorize, capacity_bound)
from .asympt import fit_capacity, default_window
from .modelbvp import ModelSpectrum, exact_spectrum
from .control import TripleSpec, realize_lq, goh_check, glc_check

ANALYSES = ("capacity", "spectrum", "fit", "factorize", "bound",
            "conditions", "realize", "model")


class SpecError(ValueError):
    """Problem-spec level failure (parse error, bad knobs, missing files)."""


def _atomic_write(path, text):
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_json(path, data):
    _atomic_write(path, json.dumps(data, sort_keys=True, indent=2) + "\n")


def _write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(v) if isinstance(v, float) else str(v)
                              for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def _load_matrix_function(base_dir, ref, what):
    path = ref if os.path.isabs(ref) else os.path.join(base_dir, ref)
    try:
        with open(path) as fh:
            return MatrixFunction.from_json_dict(json.load(fh))
    except FileNotFoundError as exc:
        raise SpecError(f"{what} file not found: {path}") from exc
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        raise SpecError(f"{what} file {path} is not a valid MatrixFunction: "
                        f"{exc}") from exc


def _parse_spec(path):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError as exc:
        raise SpecError(f"spec file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise SpecError(f"spec file {path} is not valid JSON: {exc}") from exc
    analyses = raw.get("analyses", [])
    unknown = [a for a in analyses if a not in ANALYSES]
    if unknown:
        raise SpecError(f"unknown analyses {unknown}; choose from {ANALYSES}")
    if not analyses:
        raise SpecError("spec requests no analyses")
    knobs = {
        "n": int(raw.get("n", 256)),
        "tol": float(raw.get("tol", 1e-10)),
        "j_max": int(raw.get("j_max", 8)),
        "window": tuple(raw.get("window")) if raw.get("window") else None,
        "crosscheck_rtol": float(raw.get("crosscheck_rtol", 0.05)),
    }
    if knobs["n"] < 4:
        raise SpecError("n must be >= 4")
    if knobs["tol"] <= 0:
        raise SpecError("tol must be positive")
    base_dir = os.path.dirname(os.path.abspath(path))
    Z = H = None
    if any(a != "model" for a in analyses):
        if "z" not in raw:
            raise SpecError("spec needs a 'z' reference for the requested analyses")
        Z = _load_matrix_function(base_dir, raw["z"], "Z")
        if "h" in raw and raw["h"]:
            H = _load_matrix_function(base_dir, raw["h"], "H")
    model = raw.get("model")
    if "model" in analyses and not model:
        raise SpecError("analysis 'model' needs a 'model' block")
    return analyses, Z, H, model, knobs


def run(spec_path, out_dir, seed=None, verbose=False):
    """Execute the spec; returns the process exit code."""
    log = (lambda *a: print(*a, file=sys.stderr)) if verbose else (lambda *a: None)
    try:
        analyses, Z, H, model_cfg, knobs = _parse_spec(spec_path)
    except SpecError as exc:
        print(f"error [cli]: {exc}", file=sys.stderr)
        return 1
    os.makedirs(out_dir, exist_ok=True)
    summary = {"spec": os.path.basename(spec_path), "analyses": list(analyses),
               "knobs": {k: (list(v) if isinstance(v, tuple) else v)
                         for k, v in knobs.items()},
               "seed": seed, "artifacts": {}, "cross_checks": []}
    results = {}

    def _run_one(name, fn):
        try:
            log(f"running {name}")
            fn()
            return True
        except Exception as exc:  # report with module provenance, then fail
            module = type(exc).__module__
            print(f"error [{name} via {module}]: {exc}", file=sys.stderr)
            return False

    ok = True
    if Z is not None:
        form = SymplecticForm(dim=Z.rows)
        qspec = QuadraticFormSpec(
            Z=Z, form=form, H=H,
            constraint=SubspaceSelector.lagrangian_vertical(Z))

    if "model" in analyses:
        def _model():
            m = ModelSpectrum(mu=float(model_cfg["mu"]),
                              k=int(model_cfg.get("k", 1)),
                              length=float(model_cfg.get("length", 1.0)),
                              parity=model_cfg.get("parity", "even"))
            count = int(model_cfg.get("count", 64))
            spec = exact_spectrum(m, count)
            path = os.path.join(out_dir, "model.csv")
            _write_csv(path, ["r", "lambda"], spec.csv_rows())
            summary["artifacts"]["model"] = "model.csv"
        ok &= _run_one("model", _model)

    if "capacity" in analyses:
        def _capacity():
            res = predict_capacity(Z, form, j_max=knobs["j_max"], tol=knobs["tol"])
            results["capacity"] = res
            _write_json(os.path.join(out_dir, "capacity.json"), res.to_json_dict())
            summary["artifacts"]["capacity"] = "capacity.json"
        ok &= _run_one("capacity", _capacity)

    if "spectrum" in analyses or "fit" in analyses:
        def _spectrum():
            M = assemble(qspec, knobs["n"])
            spec = spectrum(restrict(M, qspec.constraint, knobs["n"]))
            results["spectrum"] = spec
            if "spectrum" in analyses:
                _write_json(os.path.join(out_dir, "spectrum.json"),
                            spec.to_json_dict())
                _write_csv(os.path.join(out_dir, "spectrum.csv"),
                           ["n", "lambda"], spec.csv_rows())
                summary["artifacts"]["spectrum"] = "spectrum.csv"
        ok &= _run_one("spectrum", _spectrum)

    if "fit" in analyses and "spectrum" in results:
        def _fit():
            window = knobs["window"] or default_window(knobs["n"])
            fit = fit_capacity(results["spectrum"], window=window,
                               j_max=knobs["j_max"])
            results["fit"] = fit
            _write_json(os.path.join(out_dir, "fit.json"), fit.to_json_dict())
            summary["artifacts"]["fit"] = "fit.json"
        ok &= _run_one("fit", _fit)

    if "factorize" in analyses or "bound" in analyses:
        def _factorize():
            pure = QuadraticFormSpec(Z=Z, form=form,
                                     constraint=qspec.constraint)
            fac = skew_factorize(pure, N=knobs["n"], tol=knobs["tol"])
            results["factorization"] = fac
            if "factorize" in analyses:
                _write_json(os.path.join(out_dir, "factorization.json"),
                            fac.to_json_dict())
                summary["artifacts"]["factorize"] = "factorization.json"
        ok &= _run_one("factorize", _factorize)

    if "bound" in analyses and "factorization" in results:
        def _bound():
            fac = results["factorization"]
            val = capacity_bound(fac)
            results["bound"] = val
            _write_json(os.path.join(out_dir, "bound.json"),
                        {"bound": float(val), "m": fac.m,
                         "skew_eigs": [float(s) for s in fac.skew_eigs],
                         "provenance": "computed"})
            summary["artifacts"]["bound"] = "bound.json"
        ok &= _run_one("bound", _bound)

    if "conditions" in analyses:
        def _conditions():
            goh = goh_check(Z, tol=knobs["tol"])
            data = {"goh": goh.to_json_dict()}
            if goh.passed:
                data["glc"] = glc_check(Z, tol=knobs["tol"]).to_json_dict()
            _write_json(os.path.join(out_dir, "conditions.json"), data)
            summary["artifacts"]["conditions"] = "conditions.json"
        ok &= _run_one("conditions", _conditions)

    if "realize" in analyses:
        def _realize():
            lq = realize_lq(TripleSpec(Z=Z))
            _write_json(os.path.join(out_dir, "realize.json"),
                        {"B": lq.B.to_json_dict(),
                         "Omega": lq.Omega.to_json_dict(),
                         "provenance": "computed"})
            summary["artifacts"]["realize"] = "realize.json"
        ok &= _run_one("realize", _realize)

    # plot data: eigenvalues next to their predicted asymptotic values
    if "spectrum" in results and "capacity" in results:
        cap = results["capacity"]
        spec = results["spectrum"]
        if not cap.is_infinite:
            xi_p, xi_m = cap.values()
            j = int(cap.order)
            rows = []
            for n, lam in spec.csv_rows():
                xi = xi_p if n > 0 else xi_m
                pred = math.copysign(xi / (math.pi * abs(n)) ** j, n)
                rows.append((n, lam, pred))
            _write_csv(os.path.join(out_dir, "plot.csv"),
                       ["n", "lambda", "predicted_lambda"], rows)
            summary["artifacts"]["plot"] = "plot.csv"

    rtol = knobs["crosscheck_rtol"]
    checks_pass = True
    if "capacity" in results and "fit" in results:
        cap, fit = results["capacity"], results["fit"]
        if cap.is_infinite or fit.is_infinite:
            agree = cap.is_infinite == fit.is_infinite
            summary["cross_checks"].append(
                {"name": "predicted_vs_fitted_order", "pass": bool(agree)})
            checks_pass &= agree
        else:
            pv = cap.values()
            fv = fit.values()
            scale = max(max(pv), 1e-300)
            err = max(abs(pv[0] - fv[0]), abs(pv[1] - fv[1])) / scale
            passed = (int(cap.order) == int(fit.order)) and err <= rtol
            summary["cross_checks"].append({
                "name": "predicted_vs_fitted_capacity",
                "predicted": [float(v) for v in pv],
                "fitted": [float(v) for v in fv],
                "rel_err": float(err), "rtol": rtol, "pass": bool(passed)})
            checks_pass &= passed
    if "bound" in results and "fit" in results and results["fit"].order == 1:
        bound, fit = results["bound"], results["fit"]
        fitted = max(fit.values())
        passed = bound >= fitted * (1.0 - rtol)
        summary["cross_checks"].append({
            "name": "bound_vs_fitted_capacity", "bound": float(bound),
            "fitted": float(fitted), "pass": bool(passed)})
        checks_pass &= passed

    summary["ok"] = bool(ok and checks_pass)
    _write_json(os.path.join(out_dir, "summary.json"), summary)
    if not ok:
        return 1
    return 0 if checks_pass else 2


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="volcap",
        description="Batch analyses of Volterra-type quadratic forms")
    parser.add_argument("--spec", required=True, help="problem spec JSON file")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=None,
                        help="seed for randomized property suites")
    parser.add_argument("--verbose", action="store_true")
    args = parser.parse_args(argv)
    return run(args.spec, args.out, seed=args.seed, verbose=args.verbose)


if __name__ == "__main__":
    sys.exit(main())
