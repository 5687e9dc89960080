from volta.model.volta import Channel, DecoderOutput, RecoveredCodes, SpanPrediction, VoltaModel
from volta.model.generation import Greedy, Sample, generate, interpolate_latents
