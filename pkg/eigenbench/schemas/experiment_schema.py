from marshmallow import Schema, fields, validate, validates, validates_schema, ValidationError

from eigenbench.core.chart_calculus import SUITES
from eigenbench.schemas.metric_schema import MetricPresetSchema, PerturbationSchema

COMMANDS = ["mesh", "eigs", "hadamard", "branches", "ls", "generic", "verify-calculus"]

positive = validate.Range(min=0, min_inclusive=False)


class MeshSchema(Schema):
    shape = fields.Str(load_default="square", validate=validate.OneOf(["square", "disk", "annulus", "file"]))
    n = fields.Int(load_default=16, validate=validate.Range(min=1))
    rings = fields.Int(load_default=8, validate=validate.Range(min=1))
    inner_radius = fields.Float(load_default=0.5, validate=validate.Range(min=0, max=1, min_inclusive=False,
                                                                            max_inclusive=False))
    path = fields.Str()
    reorient = fields.Bool(load_default=False)

    @validates_schema
    def validate_path(self, data, **kwargs):
        if data.get("shape") == "file" and not data.get("path"):
            raise ValidationError("path is required when shape is 'file'", "path")


class ClusterSchema(Schema):
    index = fields.Int(validate=validate.Range(min=0))
    near = fields.Float()

    @validates_schema
    def validate_selector(self, data, **kwargs):
        if ("index" in data) == ("near" in data):
            raise ValidationError("give exactly one of index or near", "index")


class ToleranceSchema(Schema):
    cluster_tol = fields.Float(validate=positive)
    gap_tol = fields.Float(validate=positive)
    fd_step = fields.Float(validate=positive)


class ExperimentSchema(Schema):
    command = fields.Str(required=True, validate=validate.OneOf(COMMANDS))
    mesh = fields.Nested(MeshSchema, load_default=lambda: MeshSchema().load({}))
    metric = fields.Nested(MetricPresetSchema, load_default=lambda: MetricPresetSchema().load({}))
    perturbation = fields.Nested(PerturbationSchema, load_default=lambda: PerturbationSchema().load({}))
    cluster = fields.Nested(ClusterSchema, load_default=lambda: {"index": 1})
    tolerances = fields.Nested(ToleranceSchema, load_default=dict)
    eigen_count = fields.Int(validate=validate.Range(min=1))

    # branches
    tmin = fields.Float(load_default=-0.04)
    tmax = fields.Float(load_default=0.04)
    steps = fields.Int(load_default=9, validate=validate.Range(min=3))
    window = fields.Float(validate=positive)

    # ls
    t_values = fields.List(fields.Float(), load_default=lambda: [0.005, 0.01, 0.02])

    # generic
    samples = fields.Int(load_default=100, validate=validate.Range(min=1))
    seed = fields.Int(load_default=0)
    t_probe = fields.Float(load_default=0.01)
    confirm = fields.Int(load_default=5, validate=validate.Range(min=0))
    family = fields.Str(load_default="random", validate=validate.OneOf(["random", "conformal"]))

    # verify-calculus
    suite = fields.Str(load_default="lemma1", validate=validate.OneOf(SUITES))
    fd_steps = fields.List(fields.Float(validate=positive), load_default=lambda: [1e-3, 5e-4, 2.5e-4])

    output_dir = fields.Str()
    mesh_file = fields.Str()

    @validates("t_values")
    def validate_t_values(self, value, **kwargs):
        if not value:
            raise ValidationError("at least one t value is required")

    @validates("fd_steps")
    def validate_fd_steps(self, value, **kwargs):
        if len(value) < 2:
            raise ValidationError("fitting an order needs at least two steps")

    @validates_schema
    def validate_grid(self, data, **kwargs):
        """The branch grid must straddle t = 0"""
        if data.get("command") == "branches" and not data["tmin"] < 0 < data["tmax"]:
            raise ValidationError("tmin < 0 < tmax is required for branch tracking", "tmin")
