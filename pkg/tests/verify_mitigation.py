from src.analysis.reports import mitigation_table
from src.campaign.config import load_config
from src.campaign.runner import compare_mitigations
from src.campaign.workspace import prepare_campaign
import logging
import sys

logging.basicConfig(level=logging.INFO)

CONFIG = "configs/desk.json"
TOLERANCE = 1.0


def check_hybrid(results, counts, label, failures):
    """Hybrid must not lose to bit or word masking at any faulty k."""
    for k in counts:
        hybrid = results["hybrid"].point(k).median
        for other in ("bit", "word"):
            if hybrid > results[other].point(k).median + TOLERANCE:
                failures.append(f"{label} k={k}: hybrid {hybrid:.2f}% above {other} {results[other].point(k).median:.2f}%")


def main():
    base = load_config(CONFIG)
    faulty = [k for k in base.counts if k >= 1]
    failures = []

    try:
        ws = prepare_campaign(base, "results")
        print(f"Baseline error: {ws.baseline_error:.2f}%")

        print(f"\n--- stuck_at_1 ({base.trials} trials per k) ---")
        stuck = compare_mitigations(base.replace(fault_kind="stuck_at_1"), ws)
        print(mitigation_table(stuck))
        check_hybrid(stuck, faulty, "stuck_at_1", failures)
        if 0 in base.counts and stuck["hybrid"].point(0).median != ws.baseline_error:
            failures.append("hybrid at k=0 differs from the baseline")

        print(f"\n--- transient ({base.trials} trials per k) ---")
        transient = compare_mitigations(base.replace(fault_kind="transient"), ws)
        print(mitigation_table(transient))
        check_hybrid(transient, faulty, "transient", failures)
        word = [transient["word"].point(k).median for k in faulty]
        if len(set(word)) > 1:
            failures.append(f"transient word masking medians vary across k: {word}")

        print("\n--- Convergence (stuck_at_1, no mitigation) ---")
        for k, report in stuck["none"].convergence().items():
            print(f"k={k}: median {report.final_median:.2f}% after {report.trials_to_converge} trials")
            if report.trials_to_converge >= base.trials:
                failures.append(f"k={k}: running median never settles within {report.margin} points")

    except Exception as e:
        print(f"Error: {e}")
        import traceback
        traceback.print_exc()
        return 1

    for failure in failures:
        print(f"FAIL {failure}")
    print("PASS" if not failures else f"{len(failures)} failures")
    return 0 if not failures else 1


if __name__ == "__main__":
    sys.exit(main())
