import os
import sys
from pathlib import Path


def main():
    exe = Path(__file__).resolve().parent / "bin" / "gapkit"
    os.execv(str(exe), [str(exe), *sys.argv[1:]])
