from volta.tensor.tensor import Function, Tensor, as_tensor, is_grad_enabled, no_grad, parameter
from volta.tensor.record import ComputationRecord, backward
from volta.tensor.gradcheck import grad_check, grad_check_parameters
