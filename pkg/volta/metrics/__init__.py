from volta.metrics.bleu import sentence_bleu
from volta.metrics.diversity import bleu_precision_recall, distinct_k, self_bleu
from volta.metrics.likelihood import active_units, mutual_information, perplexity
from volta.metrics.report import MetricsReport
