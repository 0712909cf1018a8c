"""Victim-model access: wire-protocol adapter, built-in surrogate and trainable toy model."""
from .adapter import (
    SUBPROCESS_STDIO, TCP, AdapterError, AdapterTimeout, LocalAdapter, ModelAdapter, ProtocolError,
    TransportError, decode_response, encode_request, encode_response, generate, generate_many,
)
from .server import echo_generate, make_tcp_server, serve_stdio, serve_stream
from .surrogate import SurrogateModel, jaccard, surrogate_generate
from .toy import (
    OOV, MaskedTrainConfig, ToyModel, build_toy, load_toy, mask_identifiers, save_toy, softmax, toy_generate,
    toy_loss, toy_loss_grad, train_toy,
)


def open_adapter(spec: str, lang: str = "java", timeout_ms: int = 30000, max_in_flight: int = 4,
                 toy_length: int = 8):
    """Build an adapter from ``exec:<cmd>``, ``tcp:<host>:<port>``,
    ``builtin:surrogate:<train.jsonl>``, ``builtin:toy:<model file>`` or ``builtin:echo``.

    Remote adapters are started before returning, so an unreachable model
    raises ``TransportError`` here.
    """
    kind, _, rest = spec.partition(":")
    if kind == "exec" and rest:
        return ModelAdapter(SUBPROCESS_STDIO, rest, timeout_ms, max_in_flight).start()
    if kind == "tcp" and rest:
        return ModelAdapter(TCP, rest, timeout_ms, max_in_flight).start()
    if kind == "builtin":
        which, _, path = rest.partition(":")
        if which == "echo":
            return LocalAdapter(echo_generate, "echo")
        if which == "surrogate" and path:
            from ..corpus import load_dataset
            model = SurrogateModel.from_samples(load_dataset(path, lang, role="train").samples)
            return LocalAdapter(model.generate, "surrogate")
        if which == "toy" and path:
            toy = load_toy(path)
            return LocalAdapter(lambda code: toy_generate(toy, code, toy_length), "toy")
    raise ValueError(f"bad adapter spec {spec!r}")


__all__ = [
    "SUBPROCESS_STDIO", "TCP", "AdapterError", "AdapterTimeout", "TransportError", "ProtocolError",
    "ModelAdapter", "LocalAdapter", "generate", "generate_many", "encode_request", "encode_response",
    "decode_response", "echo_generate", "serve_stream", "serve_stdio", "make_tcp_server",
    "SurrogateModel", "jaccard", "surrogate_generate", "OOV", "MaskedTrainConfig", "ToyModel", "build_toy",
    "train_toy", "toy_loss", "toy_loss_grad", "toy_generate", "mask_identifiers", "save_toy", "load_toy",
    "softmax", "open_adapter",
]
