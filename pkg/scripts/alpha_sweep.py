#!/usr/bin/env python3
"""Fit convergence rates of the slow-schedule benchmark at several gains."""

import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from qdpd import cli  # noqa: E402


def main():
    cfg = os.path.join(
        os.path.dirname(__file__), "..", "configs", "table1_slow.cfg"
    )
    return cli.main(["sweep-alpha", cfg, "--alphas", "0.5,1,2"])


if __name__ == "__main__":
    sys.exit(main())
