"""Bubble-tree parsing for coordination structures."""
from .bubbles import (
    Arc,
    Bubble,
    BubbleTree,
    DependencyTree,
    Sentence,
    Token,
    build_tree,
    canonical_form,
    dependency_to_bubbles,
    lexical_head,
    projection,
    to_dependency_tree,
    trees_equal,
)
from .enumeration import count_projective_trees, enumerate_projective_trees, sample_projective_tree
from .oracle import OracleResult, derive_oracle, verify_sequence
from .transitions import (
    Configuration,
    Kind,
    Transition,
    apply,
    extract_tree,
    initial_config,
    is_terminal,
    random_walk,
    valid_transitions,
)
from .validation import ValidationReport, is_projective, validate_projective, validate_wellformed

__all__ = [
    "Arc",
    "Bubble",
    "BubbleTree",
    "Configuration",
    "DependencyTree",
    "Kind",
    "OracleResult",
    "Sentence",
    "Token",
    "Transition",
    "ValidationReport",
    "apply",
    "build_tree",
    "canonical_form",
    "count_projective_trees",
    "dependency_to_bubbles",
    "derive_oracle",
    "enumerate_projective_trees",
    "extract_tree",
    "initial_config",
    "is_projective",
    "is_terminal",
    "lexical_head",
    "projection",
    "random_walk",
    "sample_projective_tree",
    "to_dependency_tree",
    "trees_equal",
    "valid_transitions",
    "validate_projective",
    "validate_wellformed",
    "verify_sequence",
]

__version__ = "0.1.0"
