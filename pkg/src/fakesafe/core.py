"""FakeSafe model assembly, adversarial/cycle losses, training, cascades.

A model is the triple (F, R, D): F maps source-domain points to decoy
messages in the target domain, R maps decoys back, and D scores how real
a decoy looks. F and D train adversarially with least-squares objectives
while an L1 cycle penalty ties R(F(x)) to x. Cascades chain models so a
message can be re-mapped several times and unwound in reverse order.
"""

from dataclasses import dataclass, field

import numpy as np

from fakesafe.errors import ConfigError, DataError, ShapeError, StateError
from fakesafe.network import (
    INFER,
    TRAIN,
    AdamState,
    BatchNorm,
    Dense,
    Dropout,
    LeakyReLU,
    Network,
    Sigmoid,
)
from fakesafe.numerics import make_rng

GENERATOR_HIDDEN = {
    "image_image": (256, 512, 1024),
    "text_image": (64, 256, 512, 1024),
    "image_text": (128, 256, 512, 1024),
}
BATCHNORM_KINDS = ("image_image", "text_image")
DROPOUT_RATE = {"image_text": 0.2}
DISCRIMINATOR_HIDDEN = (512, 256)
LEAKY_SLOPE = 0.2

DOMAIN_KINDS = ("image", "embedding", "one_hot")


@dataclass(frozen=True)
class DomainMeta:
    """What kind of data lives on one side of a mapping."""

    name: str
    kind: str
    height: int = 0
    width: int = 0
    embed_dim: int = 0
    words: tuple = ()

    def __post_init__(self):
        if self.kind not in DOMAIN_KINDS:
            raise ConfigError(f"unknown domain kind {self.kind!r}")
        if self.kind == "image" and (self.height <= 0 or self.width <= 0):
            raise ConfigError(f"image domain {self.name!r} needs height and width")
        if self.kind == "embedding" and self.embed_dim <= 0:
            raise ConfigError(f"embedding domain {self.name!r} needs embed_dim")
        if self.kind == "one_hot" and not self.words:
            raise ConfigError(f"one-hot domain {self.name!r} needs a vocabulary")

    @classmethod
    def image(cls, name, height, width):
        return cls(name=name, kind="image", height=height, width=width)

    @classmethod
    def embedding(cls, name, dim):
        return cls(name=name, kind="embedding", embed_dim=dim)

    @classmethod
    def one_hot(cls, name, words):
        return cls(name=name, kind="one_hot", words=tuple(words))

    @property
    def dim(self):
        if self.kind == "image":
            return self.height * self.width
        if self.kind == "embedding":
            return self.embed_dim
        return len(self.words)


@dataclass
class TrainConfig:
    epochs: int = 50
    batch_size: int = 128
    learning_rate: float = 2e-4
    cycle_weight: float = 10.0
    d_steps_per_g_step: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size <= 0:
            raise ConfigError(f"batch_size must be positive, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.cycle_weight < 0:
            raise ConfigError("cycle_weight must be >= 0")
        if self.d_steps_per_g_step <= 0:
            raise ConfigError("d_steps_per_g_step must be positive")


def _output_activation(domain_kind):
    # Pixels need the [0, 1] squash; embeddings are unbounded.
    return "linear" if domain_kind == "embedding" else "sigmoid"


def _generator_specs(in_dim, out_dim, hidden, use_batchnorm, dropout_rate, output):
    specs = []
    prev = in_dim
    for width in hidden:
        specs.append(Dense(prev, width))
        if use_batchnorm:
            specs.append(BatchNorm(width))
        specs.append(LeakyReLU(LEAKY_SLOPE))
        if dropout_rate:
            specs.append(Dropout(dropout_rate))
        prev = width
    specs.append(Dense(prev, out_dim))
    if output == "sigmoid":
        specs.append(Sigmoid())
    elif output != "linear":
        raise ConfigError(f"unknown output activation {output!r}")
    return specs


def build_architecture(kind, source_dim, target_dim, f_output=None, r_output=None,
                       hidden_widths=None):
    """Layer spec lists for (F, R, D) for one of the three generator shapes.

    R mirrors F with the hidden widths reversed and source/target swapped.
    Output activations default to the kind's domain semantics (sigmoid
    toward images, linear toward embeddings); pass ``f_output``/``r_output``
    to override, e.g. for embedding-to-embedding mappings.
    ``hidden_widths`` overrides the stock widths (used for scaled-down
    gradient checking); the layer pattern is unchanged.
    """
    if kind not in GENERATOR_HIDDEN:
        raise ConfigError(
            f"unknown architecture kind {kind!r}, expected one of "
            f"{sorted(GENERATOR_HIDDEN)}"
        )
    if source_dim <= 0 or target_dim <= 0:
        raise ConfigError(f"dims must be positive, got {source_dim}, {target_dim}")
    hidden = tuple(hidden_widths) if hidden_widths is not None else GENERATOR_HIDDEN[kind]
    use_bn = kind in BATCHNORM_KINDS
    rate = DROPOUT_RATE.get(kind, 0.0)
    if f_output is None:
        f_output = "linear" if kind == "image_text" else "sigmoid"
    if r_output is None:
        r_output = "linear" if kind == "text_image" else "sigmoid"
    f_specs = _generator_specs(source_dim, target_dim, hidden, use_bn, rate, f_output)
    r_specs = _generator_specs(target_dim, source_dim, tuple(reversed(hidden)),
                               use_bn, rate, r_output)
    d_specs = []
    prev = target_dim
    for width in DISCRIMINATOR_HIDDEN:
        d_specs.extend([Dense(prev, width), LeakyReLU(LEAKY_SLOPE)])
        prev = width
    d_specs.extend([Dense(prev, 1), Sigmoid()])
    return f_specs, r_specs, d_specs


def infer_architecture_kind(source_kind, target_kind):
    """Pick the generator shape from the two domain kinds."""
    if source_kind == "image" and target_kind == "image":
        return "image_image"
    if target_kind == "image":
        return "text_image"
    if source_kind == "image":
        return "image_text"
    # Embedding-to-embedding mappings reuse the text_image widths.
    return "text_image"


class FakeSafeModel:
    """The (F, R, D) triple plus the two domain descriptions."""

    def __init__(self, f_net, r_net, d_net, source_domain, target_domain):
        checks = [
            ("F input", f_net.input_dim, source_domain.dim),
            ("F output", f_net.output_dim, target_domain.dim),
            ("R input", r_net.input_dim, target_domain.dim),
            ("R output", r_net.output_dim, source_domain.dim),
            ("D input", d_net.input_dim, target_domain.dim),
        ]
        for label, got, want in checks:
            if got != want:
                raise ConfigError(
                    f"{label} dim {got} does not match domain dim {want} "
                    f"({source_domain.name!r} -> {target_domain.name!r})"
                )
        self.f_net = f_net
        self.r_net = r_net
        self.d_net = d_net
        self.source_domain = source_domain
        self.target_domain = target_domain

    @property
    def mode(self):
        return self.f_net.mode

    def set_mode(self, mode):
        for net in (self.f_net, self.r_net, self.d_net):
            net.set_mode(mode)
        return self

    def _require_infer(self, op):
        if self.mode != INFER:
            raise StateError(f"{op} requires infer mode; call set_mode('infer')")

    def map_forward(self, x):
        """Deterministic F application: source batch to decoy batch."""
        self._require_infer("map_forward")
        x = np.asarray(x)
        if x.ndim != 2 or x.shape[1] != self.source_domain.dim:
            raise ShapeError(
                f"input shape {x.shape} does not match source domain "
                f"dim {self.source_domain.dim}"
            )
        return self.f_net.forward(x)

    def reconstruct(self, x_fake):
        """Deterministic R application: decoy batch back to source domain."""
        self._require_infer("reconstruct")
        x_fake = np.asarray(x_fake)
        if x_fake.ndim != 2 or x_fake.shape[1] != self.target_domain.dim:
            raise ShapeError(
                f"input shape {x_fake.shape} does not match target domain "
                f"dim {self.target_domain.dim}"
            )
        return self.r_net.forward(x_fake)


def build_fakesafe_model(source_domain, target_domain, rng, kind=None,
                         dtype=np.float32):
    """Assemble a fresh model for the given domain pair."""
    if kind is None:
        kind = infer_architecture_kind(source_domain.kind, target_domain.kind)
    f_output = _output_activation(target_domain.kind)
    r_output = _output_activation(source_domain.kind)
    f_specs, r_specs, d_specs = build_architecture(
        kind, source_domain.dim, target_domain.dim,
        f_output=f_output, r_output=r_output,
    )
    return FakeSafeModel(
        Network(f_specs, rng, dtype=dtype),
        Network(r_specs, rng, dtype=dtype),
        Network(d_specs, rng, dtype=dtype),
        source_domain,
        target_domain,
    )


def _as_column(x, name):
    x = np.asarray(x)
    if x.size == 0:
        raise ShapeError(f"{name} must be non-empty")
    if x.ndim == 2 and x.shape[1] == 1:
        return x[:, 0]
    if x.ndim == 1:
        return x
    raise ShapeError(f"{name} must be a column vector, got shape {x.shape}")


def d_loss_lsgan(d_real, d_fake):
    """Least-squares discriminator loss: mean (d_real-1)^2 + mean d_fake^2."""
    real = _as_column(d_real, "d_real")
    fake = _as_column(d_fake, "d_fake")
    return float(np.mean((real - 1.0) ** 2, dtype=np.float64)
                 + np.mean(fake**2, dtype=np.float64))


def g_loss_lsgan(d_fake):
    """Least-squares generator loss: mean (1 - d_fake)^2."""
    fake = _as_column(d_fake, "d_fake")
    return float(np.mean((1.0 - fake) ** 2, dtype=np.float64))


def cycle_loss_l1(x, x_rec):
    """Mean absolute round-trip error over every element."""
    x = np.asarray(x)
    x_rec = np.asarray(x_rec)
    if x.shape != x_rec.shape:
        raise ShapeError(f"shape mismatch: {x.shape} vs {x_rec.shape}")
    if x.size == 0:
        raise ShapeError("cycle loss needs non-empty inputs")
    return float(np.mean(np.abs(x_rec.astype(np.float64) - x.astype(np.float64))))


def adversarial_log_loss(d_real, d_fake, eps=1e-12):
    """Log-based adversarial objective; kept as a reference, training uses
    the least-squares variant."""
    real = _as_column(d_real, "d_real")
    fake = _as_column(d_fake, "d_fake")
    return float(np.mean(np.log(real.astype(np.float64) + eps))
                 + np.mean(np.log(1.0 - fake.astype(np.float64) + eps)))


@dataclass
class Optimizers:
    """Adam states for the three networks of one model."""

    f: AdamState
    r: AdamState
    d: AdamState

    @classmethod
    def for_model(cls, model, learning_rate):
        return cls(
            f=AdamState(model.f_net, learning_rate=learning_rate),
            r=AdamState(model.r_net, learning_rate=learning_rate),
            d=AdamState(model.d_net, learning_rate=learning_rate),
        )


def _update_discriminator(model, batch_src, batch_target_real, opt, rng):
    """One D step on real-vs-decoy least squares; F only supplies decoys."""
    x_fake = model.f_net.forward(batch_src, rng)
    d_net = model.d_net
    d_net.zero_grads()
    d_real = d_net.forward(batch_target_real, rng)
    n_real = d_real.shape[0]
    d_net.backward(2.0 * (d_real - 1.0) / n_real)
    d_fake = d_net.forward(x_fake, rng)
    n_fake = d_fake.shape[0]
    d_net.backward(2.0 * d_fake / n_fake)
    opt.d.step(d_net)
    return d_loss_lsgan(d_real, d_fake)


def _update_generators(model, batch_src, cfg, opt, rng):
    """Joint F/R step on adversarial + weighted cycle loss."""
    f_net, r_net, d_net = model.f_net, model.r_net, model.d_net
    f_net.zero_grads()
    r_net.zero_grads()
    x_fake = f_net.forward(batch_src, rng)
    d_fake = d_net.forward(x_fake, rng)
    x_rec = r_net.forward(x_fake, rng)

    g_adv = g_loss_lsgan(d_fake)
    cyc = cycle_loss_l1(batch_src, x_rec)

    n = d_fake.shape[0]
    g_from_adv = d_net.backward(-2.0 * (1.0 - d_fake) / n)
    diff = x_rec - np.asarray(batch_src, dtype=x_rec.dtype)
    g_from_cycle = r_net.backward(
        (cfg.cycle_weight / diff.size) * np.sign(diff)
    )
    f_net.backward(g_from_adv + g_from_cycle)
    opt.f.step(f_net)
    opt.r.step(r_net)
    return g_adv, cyc


def train_step(model, batch_src, batch_target_real, cfg, opt, rng):
    """One alternating update: D on real-vs-decoy, then F and R jointly.

    The D update never touches F or R parameters and vice versa; gradients
    crossing network boundaries are discarded by the next zero_grads.
    """
    if opt is None:
        raise StateError("train_step needs configured Optimizers")
    d_loss = 0.0
    for _ in range(cfg.d_steps_per_g_step):
        d_loss = _update_discriminator(model, batch_src, batch_target_real, opt, rng)
    g_adv, cyc = _update_generators(model, batch_src, cfg, opt, rng)
    return {"d_loss": d_loss, "g_adv_loss": g_adv, "cycle_loss": cyc}


def _samples_of(dataset):
    samples = getattr(dataset, "samples", dataset)
    return np.asarray(samples)


def train(model, src_dataset, target_dataset, cfg):
    """Train for cfg.epochs with per-epoch shuffling; model ends in infer mode.

    Returns ``(model, history)`` where history holds per-epoch mean losses.
    """
    src = _samples_of(src_dataset)
    tgt = _samples_of(target_dataset)
    if src.size == 0 or tgt.size == 0:
        raise DataError("training needs non-empty source and target datasets")
    if src.shape[1] != model.source_domain.dim:
        raise ShapeError(
            f"source data dim {src.shape[1]} != domain dim {model.source_domain.dim}"
        )
    if tgt.shape[1] != model.target_domain.dim:
        raise ShapeError(
            f"target data dim {tgt.shape[1]} != domain dim {model.target_domain.dim}"
        )

    n_batches = min(src.shape[0], tgt.shape[0]) // cfg.batch_size
    if cfg.epochs > 0 and n_batches == 0:
        raise ConfigError(
            f"batch_size {cfg.batch_size} exceeds dataset size "
            f"{min(src.shape[0], tgt.shape[0])}"
        )

    rng = make_rng(cfg.seed)
    model.set_mode(TRAIN)
    opt = Optimizers.for_model(model, cfg.learning_rate)
    history = []
    for epoch in range(cfg.epochs):
        src_perm = rng.permutation(src.shape[0])
        tgt_perm = rng.permutation(tgt.shape[0])
        sums = {"d_loss": 0.0, "g_adv_loss": 0.0, "cycle_loss": 0.0}
        for b in range(n_batches):
            lo, hi = b * cfg.batch_size, (b + 1) * cfg.batch_size
            batch_src = np.ascontiguousarray(src[src_perm[lo:hi]])
            batch_tgt = np.ascontiguousarray(tgt[tgt_perm[lo:hi]])
            losses = train_step(model, batch_src, batch_tgt, cfg, opt, rng)
            for key in sums:
                sums[key] += losses[key]
        record = {key: val / n_batches for key, val in sums.items()}
        record["epoch"] = epoch
        history.append(record)
    model.set_mode(INFER)
    return model, history


class Cascade:
    """Ordered chain of models; map applies F1..Fk, reconstruct Rk..R1."""

    def __init__(self, models):
        models = list(models)
        if not models:
            raise ConfigError("a cascade needs at least one model")
        for i in range(len(models) - 1):
            a, b = models[i], models[i + 1]
            if (a.target_domain.kind != b.source_domain.kind
                    or a.target_domain.dim != b.source_domain.dim):
                raise ConfigError(
                    f"cascade break between step {i} and {i + 1}: "
                    f"{a.target_domain.name!r} ({a.target_domain.kind}, "
                    f"dim {a.target_domain.dim}) feeds "
                    f"{b.source_domain.name!r} ({b.source_domain.kind}, "
                    f"dim {b.source_domain.dim})"
                )
        self.models = models

    @property
    def source_domain(self):
        return self.models[0].source_domain

    @property
    def target_domain(self):
        return self.models[-1].target_domain

    def map_forward(self, x):
        for model in self.models:
            x = model.map_forward(x)
        return x

    def reconstruct(self, x_fake):
        for model in reversed(self.models):
            x_fake = model.reconstruct(x_fake)
        return x_fake


def cascade_map(cascade, x):
    if not isinstance(cascade, Cascade):
        cascade = Cascade(cascade)
    return cascade.map_forward(x)


def cascade_reconstruct(cascade, x_fake):
    if not isinstance(cascade, Cascade):
        cascade = Cascade(cascade)
    return cascade.reconstruct(x_fake)
