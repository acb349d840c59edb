import sys

from run.user_interface import main

if __name__ == "__main__":
    sys.exit(main())
