"""Run the QEDACVC command line: python qedacvc.py {train,translate,evaluate,ablate,gradcheck} ..."""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent / 'src'))

from cli import main


if __name__ == '__main__':
    sys.exit(main())
