from volta.harness.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from volta.harness.evaluation import Generator, evaluate, export_latents, generate_samples, interpolate, sweep_code
from volta.harness.lossstream import read_loss_stream
from volta.harness.optimizer import SGD, Adam, make_optimizer
from volta.harness.synthetic import load_corpus, make_synthetic_corpus, write_corpus
from volta.harness.tokenizer import Tokenizer
from volta.harness.trainer import Trainer, TrainingResult, train
from volta.harness.verification import run_verification
