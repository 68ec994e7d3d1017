"""Entry point for running the package as a module."""

from gated_grounder.main import run

if __name__ == "__main__":
    run()
