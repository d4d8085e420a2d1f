import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hijackguard.errors import DuplicateComponent, FilterWithoutAction, MalformedDocument
from hijackguard.manifest import (
    AppIdentity,
    ComponentDecl,
    ComponentKind,
    ExportMode,
    IntentFilterDecl,
    ProtectionLevel,
    parse_manifest,
    resolve_export,
    serialize_manifest,
)

from conftest import FIXTURES, fixture_manifest

MINIMAL = '<manifest package="a.b" targetSdk="23" signature="s"><activity name="a.b.Main"/></manifest>'


def test_minimal_activity_is_unset_without_filters():
    m = parse_manifest(MINIMAL)
    (c,) = m.components
    assert c.raw_exported is None
    assert c.filters == ()
    assert m.identity == AppIdentity("a.b", "s", 0)
    assert m.target_sdk == 23


def test_k9_has_four_providers_two_explicit():
    m = fixture_manifest("k9mail")
    providers = [c for c in m.components if c.kind is ComponentKind.PROVIDER]
    assert len(providers) == 4
    explicit = [c for c in providers if resolve_export(c, m.target_sdk).mode is ExportMode.EXPLICIT]
    assert len(explicit) == 2


def test_filter_without_action():
    doc = '<manifest package="a" targetSdk="23"><receiver name="R"><intent-filter/></receiver></manifest>'
    with pytest.raises(FilterWithoutAction):
        parse_manifest(doc)
    with pytest.raises(FilterWithoutAction):
        IntentFilterDecl(())


def test_filter_with_only_categories_still_needs_an_action():
    doc = (
        '<manifest package="a" targetSdk="23"><receiver name="R"><intent-filter>'
        '<category name="c"/></intent-filter></receiver></manifest>'
    )
    with pytest.raises(FilterWithoutAction):
        parse_manifest(doc)


def test_duplicate_component():
    doc = '<manifest package="a" targetSdk="23"><activity name="X"/><service name="X"/></manifest>'
    with pytest.raises(DuplicateComponent):
        parse_manifest(doc)


@pytest.mark.parametrize(
    "doc",
    [
        "<manifest package='a' targetSdk='23'>",  # not well-formed
        "<app package='a' targetSdk='23'/>",
        "<manifest targetSdk='23'/>",
        "<manifest package='a' targetSdk='x'/>",
        "<manifest package='a' targetSdk='23' debuggable='true'/>",
        "<manifest package='a' targetSdk='23'><widget name='w'/></manifest>",
        "<manifest package='a' targetSdk='23'><activity name='A' exported='yes'/></manifest>",
        "<manifest package='a' targetSdk='23'><activity name='A' interfaces='f'/></manifest>",
        "<manifest package='a' targetSdk='23'><provider name='P'>"
        "<intent-filter><action name='x'/></intent-filter></provider></manifest>",
        "<manifest package='a' targetSdk='23'><permission name='p' level='root'/></manifest>",
        "<manifest package='a' targetSdk='23'><activity name=''/></manifest>",
    ],
)
def test_strict_mode_rejects(doc):
    with pytest.raises(MalformedDocument):
        parse_manifest(doc)


def test_parse_preserves_declaration_order_and_fields():
    doc = """
    <manifest package="x.y" targetSdk="16" signature="cert">
      <permission name="x.y.P" level="signature"/>
      <uses-permission name="android.permission.INTERNET"/>
      <service name="S" exported="true" permission="x.y.P" interfaces="getPid,run">
        <intent-filter><action name="x.y.GO"/><category name="c1"/></intent-filter>
      </service>
      <provider name="P"/>
      <activity name="A" exported="false"/>
    </manifest>
    """
    m = parse_manifest(doc)
    assert [c.name for c in m.components] == ["S", "P", "A"]
    s = m.component("S")
    assert s.raw_exported is True
    assert s.permission_guard == "x.y.P"
    assert s.bound_interfaces == ("getPid", "run")
    assert s.filters[0].categories == ("c1",)
    assert m.defined_permissions[0].level is ProtectionLevel.SIGNATURE
    assert not m.defined_permissions[0].system_defined
    assert m.used_permissions == ("android.permission.INTERNET",)
    assert m.component("A").raw_exported is False


@pytest.mark.parametrize("path", sorted(FIXTURES.glob("*.xml")), ids=lambda p: p.stem)
def test_round_trip_fixtures(path):
    m = parse_manifest(path.read_text())
    again = parse_manifest(serialize_manifest(m))
    assert again == m


# -- export resolution ------------------------------------------------------

def test_export_examples():
    sdk16 = resolve_export(ComponentDecl("P", ComponentKind.PROVIDER), 16)
    assert (sdk16.effective, sdk16.mode) == (True, ExportMode.IMPLICIT)
    sdk23 = resolve_export(ComponentDecl("P", ComponentKind.PROVIDER), 23)
    assert (sdk23.effective, sdk23.mode) == (False, ExportMode.NOT_EXPORTED)
    r = ComponentDecl("R", ComponentKind.RECEIVER, filters=(IntentFilterDecl(("x",)),))
    assert resolve_export(r, 23).mode is ExportMode.IMPLICIT


# Written out cell by cell rather than derived. Keys: raw state, kind letter,
# has filter, sdk. Only the Unset rows vary.
E, I, N = ExportMode.EXPLICIT, ExportMode.IMPLICIT, ExportMode.NOT_EXPORTED
UNSET_TABLE = {
    ("A", False, 16): N, ("A", False, 17): N, ("A", True, 16): I, ("A", True, 17): I,
    ("S", False, 16): N, ("S", False, 17): N, ("S", True, 16): I, ("S", True, 17): I,
    ("R", False, 16): N, ("R", False, 17): N, ("R", True, 16): I, ("R", True, 17): I,
    ("P", False, 16): I, ("P", False, 17): N, ("P", True, 16): I, ("P", True, 17): N,
}
KINDS = {"A": ComponentKind.ACTIVITY, "S": ComponentKind.SERVICE,
         "R": ComponentKind.RECEIVER, "P": ComponentKind.PROVIDER}


def _component(kind, raw, has_filter):
    filters = (IntentFilterDecl(("com.example.DO",)),) if has_filter else ()
    if kind is ComponentKind.PROVIDER:
        # declarations forbid provider filters; resolve_export must still be total
        c = ComponentDecl("C", kind, raw)
        object.__setattr__(c, "filters", filters)
        return c
    return ComponentDecl("C", kind, raw, filters)


def test_export_truth_table_48_cells():
    cells = list(itertools.product((True, False, None), "ASRP", (False, True), (16, 17)))
    assert len(cells) == 48
    bad = []
    for raw, k, has_filter, sdk in cells:
        want = {True: E, False: N}.get(raw) or UNSET_TABLE[(k, has_filter, sdk)]
        got = resolve_export(_component(KINDS[k], raw, has_filter), sdk)
        if got.mode is not want or got.effective != (want is not N):
            bad.append((raw, k, has_filter, sdk, got))
    assert bad == []


@given(
    kind=st.sampled_from(list(ComponentKind)),
    has_filter=st.booleans(),
    sdk=st.integers(1, 40),
)
def test_explicit_false_always_wins(kind, has_filter, sdk):
    st_ = resolve_export(_component(kind, False, has_filter), sdk)
    assert not st_.effective
    assert st_.mode is ExportMode.NOT_EXPORTED


@given(kind=st.sampled_from(list(ComponentKind)), raw=st.sampled_from([True, False, None]),
       has_filter=st.booleans(), sdk=st.integers(1, 40))
def test_effective_iff_mode_exported(kind, raw, has_filter, sdk):
    s = resolve_export(_component(kind, raw, has_filter), sdk)
    assert s.effective == (s.mode in (ExportMode.EXPLICIT, ExportMode.IMPLICIT))
