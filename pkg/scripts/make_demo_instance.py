"""Regenerate the packaged demo bundle (synthetic, seed 0)."""
import argparse
import shutil

from rngccs.domain import DEMO_PATH, generate_synthetic, load_instance, write_instance


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default=str(DEMO_PATH))
    args = ap.parse_args()
    inst = generate_synthetic(args.seed, name="demo")
    shutil.rmtree(args.out, ignore_errors=True)
    path = write_instance(inst, args.out)
    back = load_instance(path)
    assert back == inst, "bundle round trip changed the instance"
    print(f"wrote {path}: {len(inst.sources)} sources, {len(inst.facilities)} facilities, "
          f"{len(inst.sinks)} sinks, {len(inst.dist_source_facility)} feedstock arcs")


if __name__ == "__main__":
    main()
