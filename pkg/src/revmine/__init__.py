"""Review mining pipeline: discover component/aspect label vocabularies from
product reviews, rebalance multi-label training data with corpus-validated
synonym replacement, train dual sentence classifiers, and extract sentences
commenting on a chosen (component, aspect) pair.
"""

__version__ = "0.1.0"
