from marshmallow import Schema, fields, validate, validates_schema, ValidationError

from eigenbench.core.metric import RHO_PRESETS

METRIC_PRESETS = ["identity", "diag", "conformal"]
PERTURBATION_KINDS = ["zero", "diag", "constant", "random", "conformal", "residual"]

positive = validate.Range(min=0, min_inclusive=False)


class MetricPresetSchema(Schema):
    preset = fields.Str(load_default="identity", validate=validate.OneOf(METRIC_PRESETS))
    a = fields.Float(load_default=1.0, validate=positive)
    b = fields.Float(load_default=1.0, validate=positive)
    rho = fields.Str(load_default="constant", validate=validate.OneOf(sorted(RHO_PRESETS)))
    strength = fields.Float(load_default=1.0)


class PerturbationSchema(Schema):
    kind = fields.Str(load_default="zero", validate=validate.OneOf(PERTURBATION_KINDS))
    a = fields.Float(load_default=0.0)
    b = fields.Float(load_default=0.0)
    h11 = fields.Float(load_default=0.0)
    h12 = fields.Float(load_default=0.0)
    h22 = fields.Float(load_default=0.0)
    seed = fields.Int(load_default=0)
    amplitude = fields.Float(load_default=1.0, validate=validate.Range(min=0))
    frequency_cap = fields.Int(load_default=2, validate=validate.Range(min=0))
    scale = fields.Float(load_default=1.0)

    @validates_schema
    def validate_kind_parameters(self, data, **kwargs):
        """An all-zero constant tensor is spelled kind="zero"."""
        if data.get("kind") == "constant" and not any(data.get(k) for k in ("h11", "h12", "h22")):
            raise ValidationError("a constant perturbation needs one of h11, h12, h22", "h11")
