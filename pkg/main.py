"""
Command-line entry point for the deadwood tools.

Usage: python main.py <subcommand> [options]

Subcommands: targets, loss-eval, postprocess, evaluate, split, synth, render, ablate.
Run "python main.py <subcommand> --help" for the options of each one.
"""

import sys

from Cli.commands import dispatch


def main():
    """
    Dispatches the command line and returns its exit status.
    """
    return dispatch(sys.argv[1:])


if __name__ == '__main__':
    sys.exit(main())
