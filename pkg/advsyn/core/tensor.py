"""Dense tensors and the reverse-mode recording tape

Operations record a :class:`Node` on the innermost active :class:`Tape` whenever at least one of
their inputs has ``requires_grad`` set. Nodes are appended in execution order, so the node list
is already topologically sorted and :func:`backward` simply walks it in reverse, visiting every
node once.

Examples:

    ::

        w = Tensor(np.zeros((3, 1)), requires_grad=True)

        with Tape() as tape:
            tape.watch(w)
            loss = ops.mean(ops.dense(x, w, b))

        grads = backward(tape, loss)
        grads[w]
"""

import itertools
import logging
import threading

import numpy as np

from advsyn.exceptions import GradientError

logger = logging.getLogger(__name__)

DTYPE = np.float64

_ids = itertools.count()
_local = threading.local()


def _tape_stack():
    stack = getattr(_local, 'tapes', None)
    if stack is None:
        stack = _local.tapes = []
    return stack


def _grad_disabled():
    return getattr(_local, 'no_grad_depth', 0) > 0


class Tensor(object):
    """N-dimensional float array with an optional gradient slot

    Args:
        data (array-like): Values, converted to a C-contiguous float64 array
        requires_grad (bool): Record operations consuming this tensor on the active tape

    Attributes:
        data (numpy.ndarray): Row-major float64 values
        requires_grad (bool): Whether gradients flow to this tensor
        grad (numpy.ndarray): Gradient assigned by the last :func:`backward` call for leaves, or None
        id (int): Process-unique identifier used by the tape
    """

    __array_priority__ = 1000

    def __init__(self, data, requires_grad=False):
        self.data = np.ascontiguousarray(data, dtype=DTYPE)
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self.id = next(_ids)

    def __repr__(self):
        return '<{}: shape={} requires_grad={}>'.format(
            self.__class__.__name__,
            self.shape,
            self.requires_grad
        )

    def __hash__(self):
        return self.id

    def __eq__(self, other):
        return self is other

    def __len__(self):
        return self.data.shape[0]

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def item(self):
        """Return the value of a single-element tensor as a python float"""
        if self.data.size != 1:
            raise ValueError('item() requires a single-element tensor, got shape {}'.format(self.shape))
        return float(self.data.reshape(()))

    def numpy(self):
        """Return a copy of the values detached from any tape"""
        return self.data.copy()

    def detach(self):
        """Return a new tensor sharing no history with this one"""
        return Tensor(self.data.copy())


class Node(object):
    """One recorded operation

    Attributes:
        op (str): Name of the recording operation
        inputs (tuple(Tensor)): Operation inputs, in positional order
        output (Tensor): Operation result
        backward_fn (callable): Maps the output gradient to a tuple of input gradients (None for inputs that
            do not require gradients)
    """

    __slots__ = ('op', 'inputs', 'output', 'backward_fn')

    def __init__(self, op, inputs, output, backward_fn):
        self.op = op
        self.inputs = inputs
        self.output = output
        self.backward_fn = backward_fn

    def __repr__(self):
        return '<Node {}: {} -> {}>'.format(self.op, [t.id for t in self.inputs], self.output.id)


class Tape(object):
    """Recorded computation graph supporting reverse-mode differentiation

    Used as a context manager; while active, differentiable operations append :class:`Node`
    instances. Tapes may be nested, operations record on the innermost one.

    Attributes:
        nodes (list(Node)): Recorded operations in execution (topological) order
        leaves (dict): Leaf tensors keyed by id, in registration order
    """

    def __init__(self):
        self.nodes = []
        self.leaves = {}
        self._produced = set()

    def __repr__(self):
        return '<{}: {} nodes, {} leaves>'.format(self.__class__.__name__, len(self.nodes), len(self.leaves))

    def __enter__(self):
        _tape_stack().append(self)
        return self

    def __exit__(self, *exc_info):
        stack = _tape_stack()
        if not stack or stack[-1] is not self:
            raise GradientError('Tape contexts exited out of order')
        stack.pop()

    def __contains__(self, tensor):
        return tensor.id in self._produced or tensor.id in self.leaves

    def watch(self, *tensors):
        """Register leaf tensors; watched tensors always receive a gradient, zero if unused"""
        for tensor in tensors:
            if not tensor.requires_grad:
                raise GradientError('Cannot watch {!r}, requires_grad is False'.format(tensor))
            self.leaves.setdefault(tensor.id, tensor)

    def record(self, op, inputs, output, backward_fn):
        """Append a node for an operation whose output depends on a gradient-requiring input"""
        for tensor in inputs:
            if tensor.requires_grad and tensor.id not in self._produced:
                self.leaves.setdefault(tensor.id, tensor)

        self.nodes.append(Node(op, tuple(inputs), output, backward_fn))
        self._produced.add(output.id)

    def gradient(self, loss, sources):
        """Return gradients of loss with respect to each source, aligned with sources"""
        grads = backward(self, loss)
        return [grads[source] for source in sources]


class no_grad(object):
    """Context manager disabling recording on every tape in the current thread"""

    def __enter__(self):
        _local.no_grad_depth = getattr(_local, 'no_grad_depth', 0) + 1
        return self

    def __exit__(self, *exc_info):
        _local.no_grad_depth -= 1


def active_tape():
    """Return the innermost active tape, or None if recording is off"""
    if _grad_disabled():
        return None
    stack = _tape_stack()
    return stack[-1] if stack else None


def make_result(op, data, inputs, backward_fn):
    """Wrap op output data in a Tensor, recording it on the active tape when any input requires gradients

    Args:
        op (str): Operation name stored on the node
        data (numpy.ndarray): Computed output values
        inputs (sequence(Tensor)): Operation inputs
        backward_fn (callable): Called with the output gradient, returns one gradient (or None) per input

    Returns:
        Tensor: Output tensor, with requires_grad set when recorded
    """
    tape = active_tape()
    needs_grad = tape is not None and any(t.requires_grad for t in inputs)

    output = Tensor(data, requires_grad=needs_grad)

    if needs_grad:
        tape.record(op, inputs, output, backward_fn)

    return output


class Gradients(dict):
    """Mapping of leaf tensor to gradient array, also accepting tensor ids as keys"""

    def __getitem__(self, key):
        if isinstance(key, Tensor):
            key = key.id
        return super(Gradients, self).__getitem__(key)

    def __contains__(self, key):
        if isinstance(key, Tensor):
            key = key.id
        return super(Gradients, self).__contains__(key)


def backward(tape, loss):
    """Differentiate a scalar loss with respect to every leaf registered on tape

    Args:
        tape (Tape): Tape the loss was computed on
        loss (Tensor): Single-element tensor produced by a node on tape

    Returns:
        Gradients: Gradient array per leaf id; leaves untouched by the loss get zeros. Each leaf's ``grad`` attribute
        is also assigned

    Raises:
        GradientError: If loss is not a scalar, or was not produced on tape
    """
    if loss.size != 1:
        raise GradientError('backward() requires a scalar loss, got shape {}'.format(loss.shape))

    if loss not in tape:
        raise GradientError('{!r} is not on {!r}'.format(loss, tape))

    pending = {loss.id: np.ones_like(loss.data)}

    for node in reversed(tape.nodes):
        grad_out = pending.pop(node.output.id, None)
        if grad_out is None:
            continue

        input_grads = node.backward_fn(grad_out)

        for tensor, grad in zip(node.inputs, input_grads):
            if grad is None or not tensor.requires_grad:
                continue
            if grad.shape != tensor.shape:
                raise GradientError('{} produced gradient of shape {} for input of shape {}'.format(
                    node.op,
                    grad.shape,
                    tensor.shape
                ))
            if tensor.id in pending:
                pending[tensor.id] = pending[tensor.id] + grad
            else:
                pending[tensor.id] = grad

    grads = Gradients()
    for leaf_id, leaf in tape.leaves.items():
        grad = pending.get(leaf_id)
        if grad is None:
            grad = np.zeros_like(leaf.data)
        leaf.grad = grad
        grads[leaf_id] = grad

    logger.debug('Backward over {} nodes, {} leaves'.format(len(tape.nodes), len(grads)))

    return grads
