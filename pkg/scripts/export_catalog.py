"""Write every built-in catalog tree and map to a directory as JSON."""

import argparse

from treefold.catalog import export_catalog


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("directory", nargs="?", default="catalog_out")
    for path in sorted(set(export_catalog(ap.parse_args().directory))):
        print(path)


if __name__ == "__main__":
    main()
