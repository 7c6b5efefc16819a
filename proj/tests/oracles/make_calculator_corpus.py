#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Random arithmetic expressions with values computed by Python's float
evaluator (same precedence and left associativity as the calculator tool).

    python3 tests/oracles/make_calculator_corpus.py > tests/data/calculator_corpus.tsv

Columns: expression, then either the repr of the float result or "error".
"""

import random

rng = random.Random(20240611)


def number():
    if rng.random() < 0.3:
        return f"{rng.randint(0, 999)}.{rng.randint(0, 99):02d}"
    return str(rng.randint(0, 99))


def expr(depth):
    if depth == 0 or rng.random() < 0.3:
        n = number()
        return ("-" + n) if rng.random() < 0.1 else n
    if rng.random() < 0.2:
        return "(" + expr(depth - 1) + ")"
    op = rng.choice(["+", "-", "*", "/"])
    return expr(depth - 1) + f" {op} " + expr(depth - 1)


def main():
    rows = []
    while len(rows) < 190:
        e = expr(4)
        try:
            rows.append((e, repr(float(eval(e)))))
        except ZeroDivisionError:
            continue
    for e in ["1 / 0", "3 / (2 - 2)", "2 +", "(1 + 2", "1 + 2)", "abc", "", "4 ** 2", "1 +* 2", "7 / 0.0"]:
        rows.append((e, "error"))
    for e, v in rows:
        print(f"{e}\t{v}")


if __name__ == "__main__":
    main()
