"""
Sample data generator for the fit and test commands.
Writes one simulated two-group trial as a group,response,time CSV.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from src.models.models import RsesParams, TwoGroupModel  # noqa: E402
from src.services.dataset_io import write_dataset  # noqa: E402
from src.services.simulation_service import simulate_dataset  # noqa: E402

GAMMA = 0.142


def build_model(p_e: float, p_c: float, responder_ratio: float) -> TwoGroupModel:
    """Control responders at ``responder_ratio`` times the base hazard, shared by both groups"""
    return TwoGroupModel(
        RsesParams(p_e, responder_ratio * GAMMA, GAMMA),
        RsesParams(p_c, responder_ratio * GAMMA, GAMMA),
    )


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="Write a simulated RSES trial as CSV")
    parser.add_argument("output", help="Destination CSV file")
    parser.add_argument("--n", type=int, default=100, help="Subjects per group")
    parser.add_argument("--p-e", type=float, default=0.26)
    parser.add_argument("--p-c", type=float, default=0.13)
    parser.add_argument("--responder-ratio", type=float, default=0.4)
    parser.add_argument("--seed", type=int, default=1)
    args = parser.parse_args(argv)

    model = build_model(args.p_e, args.p_c, args.responder_ratio)
    data = simulate_dataset(model, args.n, args.n, args.seed)
    write_dataset(data, args.output)
    print(f"Wrote {len(data)} records to {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
