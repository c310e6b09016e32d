# This file marks the dualmln project directory as a Python package.
