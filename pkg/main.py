"""
RsesTrial - responder-stratified exponential survival trials
Console entry point
"""

import sys

from cli_commands import main as cli_main


def main():
    """Main entry point"""
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
