"""Cross-modal piece identification over embedding sequences.

Scores and recordings are sequences of unit vectors in a shared space. A
query is ranked against a collection by DTW or subsequence DTW alignment
cost, by snippet voting, or by landmark fingerprints.
"""
from .alignment import AlignmentResult, align, dtw, rank_by_alignment, sdtw
from .embedding import (
    Corpus,
    EmbeddingVector,
    Piece,
    SnippetSequence,
    cosine_distance,
    distance_matrix,
    normalize,
)
from .errors import PieceIdError
from .evaluation import (
    EvalReport,
    metrics,
    run_fragment_experiment,
    run_identification_suite,
    run_piece_identification,
    run_scalability_experiment,
)
from .fingerprint import FingerprintIndex, FingerprintParams, build_fingerprint_index, fingerprint_rank
from .io import load_corpus, save_corpus
from .ranking import RankedList, rank_of_truth
from .synth import SynthConfig, generate_corpus, sample_fragment, seconds_to_snippets, systems_to_snippets
from .voting import SnippetIndex, build_index, nearest_snippet, vote_rank

__version__ = "0.1.0"
