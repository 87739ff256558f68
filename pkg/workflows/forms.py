from django import forms
from django.core.exceptions import ValidationError

from attacks.models import AttackKind
from opacity_net.models import Encoder
from sh_codec.models import BitMode


class NumberListField(forms.Field):
    """A TOML array of numbers, optionally of fixed length."""

    def __init__(self, *, kind=float, length=None, min_value=None, **kwargs):
        self.kind, self.length, self.min_value = kind, length, min_value
        super().__init__(**kwargs)

    def to_python(self, value):
        if value in self.empty_values:
            return []
        if not isinstance(value, (list, tuple)):
            raise ValidationError("Enter a list of numbers.", code="invalid")
        try:
            items = [self.kind(v) for v in value]
        except (TypeError, ValueError):
            raise ValidationError("Enter a list of numbers.", code="invalid")
        if self.kind is int and any(isinstance(v, float) and not float(v).is_integer() for v in value):
            raise ValidationError("Enter a list of whole numbers.", code="invalid")
        return items

    def validate(self, value):
        super().validate(value)
        if self.length is not None and len(value) != self.length:
            raise ValidationError(f"Expected {self.length} values, got {len(value)}.", code="length")
        if self.min_value is not None and any(v < self.min_value for v in value):
            raise ValidationError(f"Every value must be >= {self.min_value}.", code="min_value")


def _choices(enum) -> list[tuple[str, str]]:
    return [(member.value, member.value) for member in enum]


class BitPlanForm(forms.Form):
    k = forms.IntegerField(min_value=0, max_value=31, initial=13)
    n = forms.TypedChoiceField(choices=[(v, v) for v in (1, 4, 9, 16)], coerce=int, initial=16)
    gamma_bits = forms.TypedChoiceField(choices=[(24, 24), (32, 32)], coerce=int, initial=24)
    mode = forms.ChoiceField(choices=_choices(BitMode), initial=BitMode.QUANTIZED_INTEGER.value)
    graded = forms.BooleanField(required=False, initial=True)

    def clean(self):
        cleaned = super().clean()
        if cleaned.get("mode") == BitMode.FLOAT_BIT_PATTERN.value and cleaned.get("gamma_bits") != 32:
            raise ValidationError("float-bit-pattern mode needs gamma_bits = 32.")
        k, n, gamma = cleaned.get("k"), cleaned.get("n"), cleaned.get("gamma_bits")
        if None not in (k, n, gamma):
            top = k + (int(n**0.5) - 1 if cleaned.get("graded") else 0)
            if top >= gamma:
                raise ValidationError(f"largest shift {top} does not fit {gamma} bits.")
        return cleaned


class QuantForm(forms.Form):
    c_min = forms.FloatField(initial=-8.0)
    delta = forms.FloatField(initial=2.0**-20)
    gamma_bits = forms.TypedChoiceField(choices=[(24, 24), (32, 32)], coerce=int, initial=24)
    # widen the lattice to cover both SH sets before embedding
    auto_fit = forms.BooleanField(required=False, initial=True)

    def clean_delta(self):
        delta = self.cleaned_data["delta"]
        if delta <= 0:
            raise ValidationError("delta must be positive.")
        return delta


class HashGridForm(forms.Form):
    levels = forms.IntegerField(min_value=2, initial=16)
    r_min = forms.IntegerField(min_value=1, initial=16)
    r_max = forms.IntegerField(min_value=1, initial=1024)
    table_size = forms.IntegerField(min_value=1, initial=2**16)
    feature_dim = forms.IntegerField(min_value=1, initial=4)
    always_hash = forms.BooleanField(required=False, initial=False)

    def clean(self):
        cleaned = super().clean()
        if cleaned.get("r_min") and cleaned.get("r_max") and cleaned["r_max"] <= cleaned["r_min"]:
            raise ValidationError("r_max must be > r_min.")
        return cleaned


class MlpForm(forms.Form):
    encoder = forms.ChoiceField(choices=_choices(Encoder), initial=Encoder.HASH_GRID.value)
    hidden = NumberListField(kind=int, min_value=1, initial=[64, 64])
    epochs = forms.IntegerField(min_value=1, initial=4000)
    lr = forms.FloatField(min_value=0.0, initial=5e-3)
    seed = forms.IntegerField(min_value=0, initial=0)
    log_every = forms.IntegerField(min_value=0, initial=500)


class TrainForm(forms.Form):
    iterations = forms.IntegerField(min_value=1, initial=500)
    lambda_message = forms.FloatField(min_value=0.0, initial=1.0)
    lambda_cons = forms.FloatField(min_value=0.0, initial=0.02)
    ssim_weight = forms.FloatField(min_value=0.0, max_value=1.0, initial=0.2)
    lr_opacity = forms.FloatField(min_value=0.0, initial=0.05)
    lr_sh_dc = forms.FloatField(min_value=0.0, initial=0.0025)
    lr_sh_rest = forms.FloatField(min_value=0.0, initial=0.000125)
    visibility_every = forms.IntegerField(min_value=1, initial=100)
    background = NumberListField(length=3, min_value=0.0, initial=[0.0, 0.0, 0.0])
    seed = forms.IntegerField(min_value=0, initial=0)
    log_every = forms.IntegerField(min_value=0, initial=100)


class AttackForm(forms.Form):
    kind = forms.ChoiceField(choices=_choices(AttackKind), initial=AttackKind.OPACITY_PRUNE.value)
    ratio = forms.FloatField(min_value=0.0, initial=0.3)
    sigma = forms.FloatField(min_value=0.0, initial=0.0)
    seed = forms.IntegerField(min_value=0, initial=0)

    def clean_ratio(self):
        ratio = self.cleaned_data["ratio"]
        if ratio >= 1.0:
            raise ValidationError("ratio must be < 1.")
        return ratio


class IoForm(forms.Form):
    # vanilla PLY whose geometry the joint training keeps fixed
    geometry = forms.CharField(required=False, initial="")
    # worker threads; 0 uses SPLAT_THREADS
    threads = forms.IntegerField(min_value=0, initial=0)
