"""Regenerate the three accuracy tables and print them with their bounds."""
import argparse
import sys
from pathlib import Path

from hybridfrac.cli import write_csv
from hybridfrac.tables import all_tables


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results", help="directory for the CSV files")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ok = True
    for tab in all_tables():
        write_csv(str(out / f"{tab.name}.csv"), tab.header, tab.rows)
        print(f"== {tab.name} ({'ok' if tab.ok else 'FAILED'})")
        print("  " + "  ".join(f"{h:>14}" for h in tab.header))
        for row in tab.rows:
            print("  " + "  ".join(f"{v:14.6e}" for v in row))
        for msg in tab.failures:
            print("  " + msg)
        ok &= tab.ok
    return 0 if ok else 3


if __name__ == "__main__":
    sys.exit(main())
