import argparse
import sys

from loguru import logger

from pareto_pipe.datasets import make_example_data


def configure_logging():
    """
    Setup logging.
    """

    logger.remove()
    logger.add(sys.stdout, level="INFO")


def parse_args():
    parser = argparse.ArgumentParser(
        description=(
            "Write the synthetic 100-site example dataset, its site file and "
            "a ready-to-run config."
        )
    )

    parser.add_argument(
        "--out_dir", help="Folder to write the files to.", required=True
    )
    parser.add_argument(
        "--seed", type=int, default=0, help="Seed of the generated data."
    )
    parser.add_argument(
        "--threads", type=int, default=1, help="Worker threads."
    )

    return parser.parse_args()


def main():

    args = parse_args()
    configure_logging()

    config_path = make_example_data(
        args.out_dir, seed=args.seed, threads=args.threads
    )
    logger.info(
        f"Run the workflow with: pareto-pipe transform --config {config_path}"
    )


if __name__ == "__main__":
    main()
