import sys

from . import run_cli


def main() -> int:
    if run_cli is None:
        print("maserlab was built without the command-line tool", file=sys.stderr)
        return 2
    code, out, err = run_cli(sys.argv[1:])
    sys.stdout.write(out)
    sys.stderr.write(err)
    return code


if __name__ == "__main__":
    sys.exit(main())
