"""Metagraph rewriting engine.

The store holds deduplicated nodes and links.  Patterns match against
snapshots of it.  Rewrite rules are atoms, and type systems plug in as
atoms too.  A dependent, linear, probabilistic lambda calculus is one of
those type systems.
"""

from .errors import EngineError
from .loader import load, load_text
from .pattern import Bindings, Pattern, brute_force_query, match_at, query
from .repl import Session, repl_command
from .rewrite import RewriteRule, apply_rule_at, backward_chain, forward_chain
from .sexpr import parse
from .store import LinkSpec, NodeSpec, Snapshot, Store, TruthValue
from .typesys import SimpleArity, TypeRegistry, Verdict

__version__ = "0.1.0"

__all__ = [
    "Bindings", "EngineError", "LinkSpec", "NodeSpec", "Pattern", "RewriteRule", "Session",
    "SimpleArity", "Snapshot", "Store", "TruthValue", "TypeRegistry", "Verdict", "apply_rule_at",
    "backward_chain", "brute_force_query", "forward_chain", "load", "load_text", "match_at", "parse",
    "query", "repl_command",
]
