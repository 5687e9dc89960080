from volta.objectives.schedule import beta_at
from volta.objectives.losses import (LossParts, qami_loss, qami_loss_from_logits, reconstruction_loss,
                                     regularization_loss, total_loss, vmim_loss)
