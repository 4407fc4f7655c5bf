"""Generate a large synthetic chain and time the clustering CLI on it.

    python scripts/scale_run.py --entities 100000 --txs 1000000 --workdir /tmp/scale
"""
import argparse
import json
import resource
import subprocess
import sys
import time
from pathlib import Path


def cli(*args):
    return [sys.executable, "-m", "eutxo_cluster", *map(str, args)]


def timed(argv):
    t0 = time.perf_counter()
    subprocess.run(argv, check=True)
    return time.perf_counter() - t0


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--entities", type=int, default=100_000)
    ap.add_argument("--txs", type=int, default=1_000_000)
    ap.add_argument("--multi-party-rate", type=float, default=0.08)
    ap.add_argument("--franken-rate", type=float, default=0.001)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--workdir", type=Path, default=Path("scale_run"))
    a = ap.parse_args()
    d = a.workdir
    d.mkdir(parents=True, exist_ok=True)

    gen = timed(cli("simulate", "--n-entities", a.entities, "--n-transactions", a.txs,
                    "--multi-party-tx-rate", a.multi_party_rate, "--franken-rate", a.franken_rate,
                    "--rng-seed", a.seed, "--out-txs", d / "txs.jsonl", "--out-truth", d / "truth.csv"))
    clu = timed(cli("cluster", "--input", d / "txs.jsonl", "--out-clusters", d / "clusters.csv",
                    "--out-summary", d / "summary.json"))
    peak = resource.getrusage(resource.RUSAGE_CHILDREN).ru_maxrss / 1024
    ev = timed(cli("evaluate", "--assignments", d / "clusters.csv", "--truth", d / "truth.csv",
                   "--out", d / "eval.json"))
    summary = json.loads((d / "summary.json").read_text())
    report = json.loads((d / "eval.json").read_text())
    print(json.dumps({"generate_s": round(gen, 1), "cluster_s": round(clu, 1),
                      "evaluate_s": round(ev, 1), "peak_child_rss_mb": round(peak),
                      "summary": {k: summary[k] for k in (
                          "total_clusters", "single_member", "medium_avg_size",
                          "large_clusters", "superclusters", "total_addresses")},
                      "eval": report}, indent=2))


if __name__ == "__main__":
    main()
