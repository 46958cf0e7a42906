"""factforge: bootstrap data-to-text generators from loosely aligned
property-set/text pairs.

The toolkit learns word-to-property alignments with weak supervision, trains
attention encoder-decoder generators under likelihood, multi-task, and
reinforcement objectives, and ships a template baseline plus automatic
evaluation. Everything runs on a small numpy-based autodiff core so the full
pipeline is self-contained and deterministic.
"""

__version__ = "0.1.0"
