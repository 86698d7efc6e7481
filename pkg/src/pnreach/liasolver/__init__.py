"""A small SMT-LIB2 solver for quantifier-free linear integer arithmetic.

Runs as a child process speaking the SMT-LIB2 text protocol on its standard
streams (see ``pnreach-smt`` / ``python -m pnreach.liasolver``).  Supports
the incremental commands used by reachability encodings: declare-const,
assert, push/pop, check-sat, get-model, get-value.

The decision core is exact over unbounded integers: a DPLL search on the
Boolean skeleton with an Omega-test theory solver (equality elimination,
dark-shadow projection, splinter enumeration).  Answers are sound; on
resource exhaustion the solver replies ``unknown``, never a wrong verdict.
"""
