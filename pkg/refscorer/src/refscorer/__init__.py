"""Reference scorer for context-gloss pairs, speaking lexidot-scorer/1."""

from .model import PairScorerModel, TrainResult, featurize, load_pair_file, train
from .server import PROTOCOL_ID, serve

__version__ = "0.1.0"
