#!/usr/bin/env python3

import os
from os.path import abspath, dirname
import sys
import subprocess

if __name__ == "__main__":
    root = abspath(dirname(__file__))
    os.chdir(root)

    # cap the worker pool used by the oracles
    env = dict(os.environ)
    env.setdefault("METAPHASE_THREADS", "2")

    subprocess.check_call([sys.executable, "-m", "pytest", "-vv", *sys.argv[1:]], env=env)
