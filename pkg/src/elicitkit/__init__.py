"""elicitkit: property elicitation on finite distributions.

Exact oracles for common statistical properties, loss constructions that
elicit them, a grid-plus-refinement ERM engine, identification functions and
numeric diagnostics for elicitation complexity.
"""

__version__ = "0.1.0"
