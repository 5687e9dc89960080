import logging
from typing import Dict, List, NamedTuple, Tuple

import numpy as np

from volta.tensor.tensor import Tensor
from volta.util.exceptions import ContractError

log = logging.getLogger(__name__)


class RecordEntry(NamedTuple):
    tag: str
    inputs: Tuple[Tensor, ...]
    output: Tensor


class ComputationRecord:
    """
    Topologically ordered record of the operations that produced one output.

    Built from the output by walking creator links; replaying it backward visits every node
    exactly once, in reverse topological order. A record belongs to one training step and must
    not be shared across threads.
    """

    def __init__(self, output: Tensor):
        self.__output = output
        self.__nodes = self.__topological_order(output)

    @staticmethod
    def __topological_order(output):
        order = []
        visited = set()
        stack = [(output, False)]
        while stack:
            tensor, expanded = stack.pop()
            if expanded:
                order.append(tensor)
                continue
            if id(tensor) in visited:
                continue
            visited.add(id(tensor))
            stack.append((tensor, True))
            if tensor.creator is not None:
                for parent in tensor.creator.inputs:
                    if parent.requires_grad and id(parent) not in visited:
                        stack.append((parent, False))
        return order

    @property
    def output(self):
        return self.__output

    @property
    def nodes(self) -> List[Tensor]:
        return self.__nodes

    @property
    def entries(self) -> List[RecordEntry]:
        return [RecordEntry(node.creator.tag, node.creator.inputs, node)
                for node in self.__nodes if node.creator is not None]

    @property
    def leaves(self) -> List[Tensor]:
        return [node for node in self.__nodes if node.creator is None]

    def replay_backward(self, seed=None) -> Dict[Tensor, np.ndarray]:
        """Propagate from the output; accumulates into the `grad` of every leaf reached"""
        output = self.__output
        grads = {id(output): np.ones_like(output.data) if seed is None else np.asarray(seed)}
        gradient_map = {}

        for node in reversed(self.__nodes):
            grad = grads.pop(id(node), None)
            if grad is None:
                continue
            if node.creator is None:
                node.grad = grad.copy() if node.grad is None else node.grad + grad
                gradient_map[node] = node.grad
                continue
            input_grads = node.creator.backward(grad)
            for parent, parent_grad in zip(node.creator.inputs, input_grads):
                if parent_grad is None or not parent.requires_grad:
                    continue
                key = id(parent)
                grads[key] = parent_grad if key not in grads else grads[key] + parent_grad

        return gradient_map


def backward(loss: Tensor) -> Dict[Tensor, np.ndarray]:
    """
    Gradient of a scalar loss with respect to every leaf that requires a gradient.

    Gradients accumulate: calling backward twice without zeroing the leaves sums both passes.
    """
    if loss.size != 1:
        raise ContractError('backward() needs a scalar loss, got shape %s' % (loss.shape,))
    if not loss.requires_grad:
        raise ContractError('backward() needs a loss produced by recorded operations')
    record = ComputationRecord(loss)
    log.debug(f'backward(): replaying {len(record.nodes)} nodes')
    return record.replay_backward()
