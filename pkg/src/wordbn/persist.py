"""Bit-exact model persistence with versioned, checksummed documents.

Every document starts with a format line, the model kind and a sha256
of the payload, so truncation and version drift fail loudly. Floats
are written with `repr`, whose shortest round-trip form reloads to the
identical bit pattern, making saved models reproduce their scores
exactly.
"""

import hashlib
import os

import numpy as np

from .bayesnet import BlockBayesEnsemble, DiscreteBayesClassifier
from .coupled_hmm import ClassModelBank, CoupledHmm
from .quantize import (
    AttributeDiscretizer,
    Codebook,
    CorrelationPca,
    KMeansQuantizer,
    Standardizer,
    VectorDiscretizer,
)

FORMAT_LINE = "wordbn/model 1"


class VersionError(ValueError):
    """The document's format line names an unsupported version."""


class ChecksumError(ValueError):
    """The document's payload does not match its recorded checksum."""


def _encode_value(value) -> tuple[str, str]:
    """Map one python value to a `(type-code, text)` pair."""
    if value is None:
        return "n", ""
    if isinstance(value, str):
        if "\t" in value or "\n" in value:
            raise ValueError("strings with tabs or newlines cannot be persisted")
        return "s", value
    if isinstance(value, (bool, np.bool_)):
        return "i", str(int(value))
    if isinstance(value, (int, np.integer)):
        return "i", str(int(value))
    if isinstance(value, (float, np.floating)):
        return "f", repr(float(value))
    if isinstance(value, np.ndarray):
        shape = "x".join(str(d) for d in value.shape)
        flat = value.ravel(order="C")
        if value.dtype.kind in "iu":
            return "ia", shape + "\t" + ",".join(str(int(v)) for v in flat)
        if value.dtype.kind == "f":
            return "fa", shape + "\t" + ",".join(repr(float(v)) for v in flat)
        raise ValueError(f"array dtype {value.dtype} cannot be persisted")
    if isinstance(value, (list, tuple)):
        if all(isinstance(v, (int, np.integer)) for v in value):
            return "il", ",".join(str(int(v)) for v in value)
        if all(isinstance(v, (int, float, np.integer, np.floating)) for v in value):
            return "fl", ",".join(repr(float(v)) for v in value)
        raise ValueError("only flat numeric lists can be persisted")
    raise ValueError(f"value of type {type(value).__name__} cannot be persisted")


def _decode_value(code: str, text: str):
    if code == "n":
        return None
    if code == "s":
        return text
    if code == "i":
        return int(text)
    if code == "f":
        return float(text)
    if code == "il":
        return [int(v) for v in text.split(",")] if text else []
    if code == "fl":
        return [float(v) for v in text.split(",")] if text else []
    if code in ("ia", "fa"):
        shape_text, _, data = text.partition("\t")
        shape = tuple(int(d) for d in shape_text.split("x")) if shape_text else ()
        if code == "ia":
            vals = [int(v) for v in data.split(",")] if data else []
            return np.array(vals, dtype=np.int64).reshape(shape)
        vals = [float(v) for v in data.split(",")] if data else []
        return np.array(vals, dtype=np.float64).reshape(shape)
    raise ValueError(f"unknown field type code {code!r}")


def _payload_lines(fields: dict) -> list[str]:
    lines = []
    for key, value in fields.items():
        code, text = _encode_value(value)
        lines.append(f"{key}\t{code}\t{text}" if text else f"{key}\t{code}")
    return lines


def _parse_payload(lines) -> dict:
    fields = {}
    for line in lines:
        parts = line.split("\t", 2)
        key, code = parts[0], parts[1]
        text = parts[2] if len(parts) > 2 else ""
        fields[key] = _decode_value(code, text)
    return fields


def _codebook_fields(prefix: str, cb: Codebook) -> dict:
    return {
        f"{prefix}.centroids": cb.centroids,
        f"{prefix}.seed": cb.seed,
        f"{prefix}.inertia": cb.inertia,
    }


def _codebook_from(prefix: str, fields: dict) -> Codebook:
    return Codebook(
        centroids=fields[f"{prefix}.centroids"],
        seed=fields[f"{prefix}.seed"],
        inertia=fields[f"{prefix}.inertia"],
    )


def _encode_static(model: DiscreteBayesClassifier) -> dict:
    fields = {
        "structure": model.structure,
        "root": model.root,
        "cardinalities": model.cardinalities,
        "classes": model.classes,
        "noise_floor": model.noise_floor,
        "random_state": model.random_state,
        "classes_": model.classes_,
        "cardinalities_": model.cardinalities_,
        "edges_": np.asarray(model.edges_, dtype=np.int64).reshape(len(model.edges_), 2),
        "parent_": model.parent_,
        "root_": model.root_,
        "class_log_prior_": model.class_log_prior_,
        "n_cpts": len(model.cpts_),
    }
    for i, cpt in enumerate(model.cpts_):
        fields[f"cpt.{i}"] = cpt
    return fields


def _decode_static(fields: dict) -> DiscreteBayesClassifier:
    model = DiscreteBayesClassifier(
        structure=fields["structure"],
        root=fields["root"],
        cardinalities=fields["cardinalities"],
        classes=fields["classes"],
        noise_floor=fields["noise_floor"],
        random_state=fields["random_state"],
    )
    model.classes_ = fields["classes_"]
    model.cardinalities_ = fields["cardinalities_"]
    model.edges_ = [(int(i), int(j)) for i, j in fields["edges_"]]
    model.parent_ = fields["parent_"]
    model.root_ = fields["root_"]
    model.class_log_prior_ = fields["class_log_prior_"]
    model.cpts_ = [fields[f"cpt.{i}"] for i in range(fields["n_cpts"])]
    return model


def _encode_ensemble(model: BlockBayesEnsemble) -> dict:
    fields = {
        "structure": model.structure,
        "root": model.root,
        "cardinalities": model.cardinalities,
        "noise_floor": model.noise_floor,
        "random_state": model.random_state,
        "classes_": model.classes_,
        "n_blocks": len(model.block_models_),
    }
    for t, block in enumerate(model.block_models_):
        for key, value in _encode_static(block).items():
            fields[f"block.{t}.{key}"] = value
    return fields


def _decode_ensemble(fields: dict) -> BlockBayesEnsemble:
    model = BlockBayesEnsemble(
        structure=fields["structure"],
        root=fields["root"],
        cardinalities=fields["cardinalities"],
        noise_floor=fields["noise_floor"],
        random_state=fields["random_state"],
    )
    model.classes_ = fields["classes_"]
    model.block_models_ = []
    for t in range(fields["n_blocks"]):
        prefix = f"block.{t}."
        sub = {k[len(prefix) :]: v for k, v in fields.items() if k.startswith(prefix)}
        model.block_models_.append(_decode_static(sub))
    return model


def _encode_chmm(model: CoupledHmm) -> dict:
    return {
        "pi.0": model.pi[0],
        "pi.1": model.pi[1],
        "A.0": model.A[0],
        "A.1": model.A[1],
        "B.0": model.B[0],
        "B.1": model.B[1],
    }


def _decode_chmm(fields: dict) -> CoupledHmm:
    pi = (fields["pi.0"], fields["pi.1"])
    A = (fields["A.0"], fields["A.1"])
    B = (fields["B.0"], fields["B.1"])
    model = CoupledHmm(pi=pi, A=A, B=B)
    # The constructor renormalizes rows, which can move entries by one
    # ulp; scores must match the saved model bit-for-bit, so keep the
    # stored arrays after validation.
    model.pi, model.A, model.B = pi, A, B
    return model


def _encode_quantizer(model: KMeansQuantizer) -> dict:
    fields = {
        "n_clusters": model.n_clusters,
        "n_init": model.n_init,
        "max_iter": model.max_iter,
        "random_state": model.random_state,
        "inertia_": model.inertia_,
    }
    fields.update(_codebook_fields("codebook", model.codebook_))
    return fields


def _decode_quantizer(fields: dict) -> KMeansQuantizer:
    model = KMeansQuantizer(
        n_clusters=fields["n_clusters"],
        n_init=fields["n_init"],
        max_iter=fields["max_iter"],
        random_state=fields["random_state"],
    )
    model.codebook_ = _codebook_from("codebook", fields)
    model.cluster_centers_ = model.codebook_.centroids
    model.inertia_ = fields["inertia_"]
    model.labels_ = None
    return model


def _discretizer_params(model) -> dict:
    return {
        "n_clusters": model.n_clusters,
        "n_init": model.n_init,
        "max_iter": model.max_iter,
        "random_state": model.random_state,
    }


def _encode_attr_discretizer(model: AttributeDiscretizer) -> dict:
    fields = _discretizer_params(model)
    fields["cardinalities_"] = list(model.cardinalities_)
    fields["n_codebooks"] = len(model.codebooks_)
    for j, cb in enumerate(model.codebooks_):
        fields.update(_codebook_fields(f"codebook.{j}", cb))
    return fields


def _decode_attr_discretizer(fields: dict) -> AttributeDiscretizer:
    model = AttributeDiscretizer(
        n_clusters=fields["n_clusters"],
        n_init=fields["n_init"],
        max_iter=fields["max_iter"],
        random_state=fields["random_state"],
    )
    model.cardinalities_ = list(fields["cardinalities_"])
    model.codebooks_ = [
        _codebook_from(f"codebook.{j}", fields) for j in range(fields["n_codebooks"])
    ]
    return model


def _encode_vector_discretizer(model: VectorDiscretizer) -> dict:
    fields = _discretizer_params(model)
    fields["cardinalities_"] = list(model.cardinalities_)
    fields.update(_codebook_fields("codebook", model.codebook_))
    return fields


def _decode_vector_discretizer(fields: dict) -> VectorDiscretizer:
    model = VectorDiscretizer(
        n_clusters=fields["n_clusters"],
        n_init=fields["n_init"],
        max_iter=fields["max_iter"],
        random_state=fields["random_state"],
    )
    model.cardinalities_ = list(fields["cardinalities_"])
    model.codebook_ = _codebook_from("codebook", fields)
    return model


def _encode_standardizer(model: Standardizer) -> dict:
    return {"mean_": model.mean_, "scale_": model.scale_}


def _decode_standardizer(fields: dict) -> Standardizer:
    model = Standardizer()
    model.mean_ = fields["mean_"]
    model.scale_ = fields["scale_"]
    return model


def _encode_pca(model: CorrelationPca) -> dict:
    return {
        "n_components": model.n_components,
        "explained_variance_": model.explained_variance_,
        "components_": model.components_,
        "n_features_in_": model.n_features_in_,
    }


def _decode_pca(fields: dict) -> CorrelationPca:
    model = CorrelationPca(n_components=fields["n_components"])
    model.explained_variance_ = fields["explained_variance_"]
    model.components_ = fields["components_"]
    model.n_features_in_ = fields["n_features_in_"]
    return model


_CODECS = {
    "static-classifier": (DiscreteBayesClassifier, _encode_static, _decode_static),
    "block-ensemble": (BlockBayesEnsemble, _encode_ensemble, _decode_ensemble),
    "chmm": (CoupledHmm, _encode_chmm, _decode_chmm),
    "kmeans-quantizer": (KMeansQuantizer, _encode_quantizer, _decode_quantizer),
    "attribute-discretizer": (
        AttributeDiscretizer,
        _encode_attr_discretizer,
        _decode_attr_discretizer,
    ),
    "vector-discretizer": (
        VectorDiscretizer,
        _encode_vector_discretizer,
        _decode_vector_discretizer,
    ),
    "standardizer": (Standardizer, _encode_standardizer, _decode_standardizer),
    "correlation-pca": (CorrelationPca, _encode_pca, _decode_pca),
}


def kind_of(model) -> str:
    """The persistence kind string for a supported model object."""
    for kind, (cls, _, _) in _CODECS.items():
        if type(model) is cls:
            return kind
    raise ValueError(f"no persistence support for {type(model).__name__}")


def save_model(model, path) -> None:
    """Write one model as a versioned, checksummed text document."""
    kind = kind_of(model)
    _, encode, _ = _CODECS[kind]
    payload = "\n".join(_payload_lines(encode(model))) + "\n"
    digest = hashlib.sha256(payload.encode("utf-8")).hexdigest()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{FORMAT_LINE}\nkind {kind}\nsha256 {digest}\n{payload}")


def load_model(path, expected_kind: str | None = None):
    """Load a saved model, verifying version, checksum and kind."""
    with open(path, encoding="utf-8", newline="\n") as fh:
        text = fh.read()
    lines = text.split("\n")
    if len(lines) < 3 or not lines[0].startswith("wordbn/model"):
        raise VersionError(f"{path}: not a recognizable model document")
    if lines[0] != FORMAT_LINE:
        raise VersionError(f"{path}: unsupported format {lines[0]!r}")
    if not lines[1].startswith("kind "):
        raise ValueError(f"{path}: missing kind line")
    kind = lines[1][len("kind ") :]
    if not lines[2].startswith("sha256 "):
        raise ValueError(f"{path}: missing checksum line")
    recorded = lines[2][len("sha256 ") :]
    payload = "\n".join(lines[3:])
    digest = hashlib.sha256(payload.encode("utf-8")).hexdigest()
    if digest != recorded:
        raise ChecksumError(f"{path}: payload checksum mismatch")
    if expected_kind is not None and kind != expected_kind:
        raise ValueError(f"{path}: expected kind {expected_kind!r}, found {kind!r}")
    if kind not in _CODECS:
        raise ValueError(f"{path}: unknown model kind {kind!r}")
    _, _, decode = _CODECS[kind]
    return decode(_parse_payload(ln for ln in lines[3:] if ln))


def save_bank(bank: ClassModelBank, out_dir) -> str:
    """Write one model document per class plus an index; returns the index path."""
    os.makedirs(out_dir, exist_ok=True)
    index_lines = []
    for class_id, model, q in zip(bank.classes, bank.models, bank.q_per_class):
        rel = f"class_{int(class_id):03d}.chmm"
        save_model(model, os.path.join(out_dir, rel))
        index_lines.append(f"{int(class_id)}\t{int(q)}\t{rel}")
    index_path = os.path.join(out_dir, "bank.tsv")
    with open(index_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(index_lines) + "\n")
    return index_path


def load_bank(index_path) -> ClassModelBank:
    """Load a class-model bank from its index manifest."""
    base = os.path.dirname(os.path.abspath(index_path))
    classes, models, qs = [], [], []
    with open(index_path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line:
                continue
            class_str, q_str, rel = line.split("\t")
            classes.append(int(class_str))
            qs.append(int(q_str))
            models.append(load_model(os.path.join(base, rel), expected_kind="chmm"))
    return ClassModelBank(classes=classes, models=models, q_per_class=qs)
