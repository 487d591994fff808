"""Skip-gram negative sampling word2vec with Hogwild and HogBatch trainers."""

from .config import TrainingConfig, TrainingReport
from .corpus import (CorpusReader, EncodedCorpus, Vocabulary, build_vocab, iter_sentences,
                     keep_probability, read_corpus)
from .distsim import SyncPolicy, run_distributed, synchronize
from .hogbatch import (BatchWorkspace, Minibatch, apply_updates, build_minibatch, compute_errors,
                       forward_scores, run_hogbatch)
from .hogwild import WindowTask, run_hogwild, train_window_hogwild
from .model import EmbeddingModel, LearningRate, current_alpha, init_model, load_vectors, save_vectors
from .sampling import NegativeSampleTable, Rng, build_unigram_table, dynamic_window, sample_negative, sigmoid

__version__ = "0.1.0"
