"""Allow ``python -m relaysim`` as an alias for the console script."""

from .cli import entry

if __name__ == "__main__":
    entry()
