"""Allow ``python -m chainboost`` as an alias for the console script."""

from chainboost.cli import entry

if __name__ == "__main__":
    entry()
