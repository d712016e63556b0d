"""Game-semantics toolkit for first-order classical logic.

Typecheck and normalize Church-style lambda-mu terms, interpret them as
innocent strategies on labelled arenas, compose and compare strategies,
decide type isomorphisms, translate between the one-move and
question/answer models, replay terms on a Krivine machine, and serve
interactive plays over HTTP.
"""

__version__ = "0.1.0"
