"""Grammar-constrained generation of aspect sentiment quadruples.

The pipeline: ingest review files into samples, linearize gold quadruples
into token sequences, constrain any autoregressive scorer with the
quadruple grammar so decoding always yields parseable output, fuse a
latent category representation into the encoder states, and score
predictions by exact quadruple match.
"""

from .cbow import (CbowVocab, build_cbow_vocab, featurize, featurize_corpus,
                   load_cbow_vocab, load_wordlist, save_cbow_vocab)
from .resources import data_path
from .decode import (
    ConfigError,
    DecodeResult,
    GrammarError,
    OracleScorer,
    QuadrupleGrammar,
    RandomScorer,
    Vocabulary,
    build_vocabulary,
    constrained_beam_decode,
    constrained_greedy_decode,
    unconstrained_greedy_decode,
)
from .evaluation import (
    EvalResult,
    evaluate,
    evaluate_by_subset,
    format_report,
    load_linearized_quads,
    match_counts,
    pairs_from_predictions,
)
from .fusion import (
    FusedMemory,
    FusionConfig,
    ModelScorer,
    TrainedModel,
    decode_samples,
    load_model,
    prepare_memory,
    save_model,
    train_model,
    train_seq2seq,
)
from .lcd import LcdParams, infer_lcd, infer_lcd_batch, init_lcd_params, lcd_forward, train_lcd
from .linearize import LinearizeError, ParseError, linearize, parse
from .schema import (
    CategorySchema,
    Quadruple,
    Sample,
    SchemaError,
    dataset_stats,
    derive_schema,
    ingest_acos_file,
    load_schema,
    make_schema,
)
from .trie import TokenTrie, build_category_trie, build_sentiment_trie

__version__ = "0.1.0"

__all__ = [
    "CategorySchema", "CbowVocab", "ConfigError", "DecodeResult",
    "EvalResult", "FusedMemory", "FusionConfig", "GrammarError",
    "LcdParams", "LinearizeError", "ModelScorer", "OracleScorer",
    "ParseError", "Quadruple", "QuadrupleGrammar", "RandomScorer",
    "Sample", "SchemaError", "TokenTrie", "TrainedModel", "Vocabulary",
    "build_category_trie", "build_cbow_vocab", "build_sentiment_trie",
    "build_vocabulary", "constrained_beam_decode",
    "constrained_greedy_decode", "data_path", "dataset_stats",
    "decode_samples", "derive_schema", "evaluate", "evaluate_by_subset",
    "featurize", "featurize_corpus", "format_report", "infer_lcd",
    "infer_lcd_batch", "ingest_acos_file", "init_lcd_params", "lcd_forward",
    "linearize", "load_cbow_vocab", "load_linearized_quads", "load_model",
    "load_schema", "load_wordlist", "make_schema", "match_counts",
    "pairs_from_predictions", "parse", "prepare_memory", "save_cbow_vocab",
    "save_model", "train_lcd", "train_model", "train_seq2seq",
    "unconstrained_greedy_decode"
]
