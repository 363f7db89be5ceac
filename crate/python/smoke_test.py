"""Smoke test for the `stampede` extension module.

Build and install first, for example:
    maturin build --release -m crates/py/Cargo.toml && pip install target/wheels/stampede-*.whl
then run from the repository root:
    python python/smoke_test.py
"""

import math
import pathlib
import sys

import stampede

DATA = pathlib.Path(__file__).resolve().parent.parent / "data"


def check(label, condition):
    print(("ok   " if condition else "FAIL ") + label)
    return condition


def main():
    results = []
    panel = stampede.load_panel(str(DATA))
    results.append(check("panel has five years", panel.years == [1954, 1986, 2003, 2013, 2025]))

    fit = stampede.fit_ols(
        [("density", panel.densities), ("admin_score", panel.admin_scores)], panel.fatalities
    )
    expected = [1516.25, -52.75, -221.0]
    results.append(
        check(
            "OLS coefficients match the exact solution",
            all(abs(b - e) < 1e-9 for b, e in zip(fit.coefficients, expected)),
        )
    )
    results.append(check("prediction", abs(fit.predict([1.0, 8.0, 3.0]) - 431.25) < 1e-9))
    results.append(check("p-values present", fit.p_values is not None and len(fit.p_values) == 3))

    slope, _, _ = stampede.fit_trend(panel.years, panel.fatalities)
    results.append(check("trend slope", abs(slope + 9.1355) < 1e-3))

    timeline = dict(stampede.cri_timeline(panel))
    results.append(check("CRI 1954", abs(timeline[1954] - 0.661667) < 1e-5))
    results.append(check("CRI single point", abs(stampede.cri(8.0, 3.2, 1.58, 3) - timeline[1954]) < 1e-12))
    results.append(
        check(
            "density classes",
            [stampede.classify_density(d) for d in (5.9, 6.0, 8.0)] == ["Safe", "Elevated", "Critical"],
        )
    )
    try:
        stampede.cri(5.0, 3.0, 1.0, 5, weights=(0.9, 0.1, 0.1, 0.1))
        results.append(check("bad weights raise ValueError", False))
    except ValueError:
        results.append(check("bad weights raise ValueError", True))

    model = stampede.tfidf(
        [(1, ["unforeseen surge"]), (2, ["crowd mismanagement surge"]), (3, ["barricade collapse"])]
    )
    results.append(check("TF-IDF hand example", abs(model.weight(1, "surge") - 0.5 * math.log(1.5)) < 1e-12))
    results.append(check("recurring phrase", model.recurring_phrases(1) == [("surg", [1, 2])]))
    results.append(check("Porter stem", stampede.stem("mismanagement") == "mismanag"))

    a = stampede.simulate_preset(str(DATA), 1954, agents=60, duration=10.0, seed=7)
    b = stampede.simulate_preset(str(DATA), 1954, agents=60, duration=10.0, seed=7, parallel=False)
    results.append(check("simulation is deterministic across thread modes", a == b))
    results.append(check("agents conserved", a["exited"] + a["incapacitated"] + a["active"] == 60))
    opened = stampede.simulate_preset(str(DATA), 1954, agents=10, duration=1.0, vip_closure=False)
    results.append(check("lifting VIP closure opens exits", opened["open_exits"] > a["open_exits"]))

    try:
        stampede.load_panel("/nonexistent-stampede-dir")
        results.append(check("missing data raises OSError", False))
    except OSError:
        results.append(check("missing data raises OSError", True))

    passed = sum(results)
    print(f"{passed}/{len(results)} checks passed")
    return 0 if passed == len(results) else 1


if __name__ == "__main__":
    sys.exit(main())
