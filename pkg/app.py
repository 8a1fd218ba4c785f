import json

import streamlit as st
import pandas as pd
import numpy as np

from db.models import TensorRecord
from db.repository import parse_json
from src.chaos_oracle.oracle_service import build_chaos_basis, build_operators, check_axioms, check_n_meixner
from src.classify3.classify_service import CaseI, CaseII, classify
from src.config import settings
from src.config.settings import VerifyConfig
from src.core.errors import MeixnerError
from src.core.tensor import MeixnerSpec, canonical_tensor, validate_lcc
from src.dist3.distribution import CanonicalGamma3, in_domain, laplace_closed_form
from src.integrability.integrability_service import necessary_conditions
from src.logging.log_service import logger
from src.moments.moment_service import MomentTable, constant_k, laplace_radius, taylor_laplace
from src.verify.verify_service import full_suite

st.set_page_config(page_title=settings.APP_TITLE, layout="wide")

# Initialize session state variables
if 'spec' not in st.session_state:
    st.session_state.spec = MeixnerSpec.normalized(canonical_tensor(0.5))
if 'source' not in st.session_state:
    st.session_state.source = "canonical a = 0.5"
if 'verify_report' not in st.session_state:
    st.session_state.verify_report = None

st.title(settings.APP_TITLE)

with st.sidebar:
    st.header("Input")
    mode = st.radio("Tensor", ["Canonical family", "Upload JSON"], key="mode")

    if mode == "Canonical family":
        a = st.number_input("a", min_value=-2.0, max_value=2.0, value=0.5, step=0.05, key="a")
        b = st.number_input("b (alpha_222)", min_value=-2.0, max_value=2.0, value=float(a), step=0.05, key="b")
        if st.button("Load canonical tensor"):
            st.session_state.spec = MeixnerSpec.normalized(canonical_tensor(a, b))
            st.session_state.source = f"canonical a = {a}, b = {b}"
            st.session_state.verify_report = None
    else:
        uploaded = st.file_uploader("Tensor JSON", type=["json"])
        if uploaded is not None and st.button("Load file"):
            try:
                record = TensorRecord.from_dict(parse_json(uploaded.getvalue().decode("utf-8")))
                st.session_state.spec = record.to_spec()
                st.session_state.source = uploaded.name
                st.session_state.verify_report = None
            except MeixnerError as e:
                logger.error(f"Error loading tensor: {e}")
                st.error(f"{type(e).__name__}: {e}")

spec = st.session_state.spec
st.caption(f"Input: {st.session_state.source} (d = {spec.dimension})")

overview, moments_tab, laplace_tab, oracle_tab, verify_tab = st.tabs(
    ["Overview", "Moments", "Laplace", "Chaos oracle", "Verify"])

with overview:
    entries = pd.DataFrame(spec.alpha.to_entries(), columns=["i", "j", "k", "alpha"])
    st.subheader("Nonzero tensor entries")
    st.dataframe(entries, hide_index=True)
    record = TensorRecord.from_tensor(spec.alpha, spec.beta, spec.mean)
    st.download_button("Download tensor JSON", json.dumps(record.to_dict(), indent=2),
                       file_name="tensor.json", mime="application/json")

    lcc = validate_lcc(spec)
    report = necessary_conditions(spec.alpha)
    col1, col2, col3 = st.columns(3)
    col1.metric("Consistency", "pass" if lcc.passed else "fail")
    col2.metric("Obstruction (normalized)", f"{report.worst:.3g}")
    col3.metric("K", f"{constant_k(spec):.4g}")
    st.write(report.verdict)
    for violation in lcc.violations:
        st.warning(violation)

    if spec.dimension == 3:
        try:
            result = classify(spec.alpha)
            st.subheader(f"Classification: {result.variant}")
            if isinstance(result, CaseI):
                st.write(f"a = {result.a:.10g}")
            elif isinstance(result, CaseII):
                st.dataframe(pd.DataFrame([c.to_dict() for c in result.components]), hide_index=True)
            else:
                st.write(f"Rejected ({result.reason})")
                if result.obstruction:
                    st.json(result.obstruction)
            if result.U is not None:
                st.dataframe(pd.DataFrame(result.U), hide_index=True)
        except MeixnerError as e:
            st.error(f"{type(e).__name__}: {e}")
    else:
        st.info("Classification is only available for d = 3")

with moments_tab:
    max_degree = st.slider("Max total degree", 0, 8, 4, key="max_degree")
    exact = st.checkbox("Exact rational arithmetic", key="exact")
    try:
        tbl = MomentTable(spec, exact=exact)
        rows = [{"index": str(idx), "degree": n, "value": float(value),
                 "exact": str(value) if exact else ""}
                for n in range(max_degree + 1)
                for idx, value in tbl.moments_of_degree(n).items()]
        st.dataframe(pd.DataFrame(rows), hide_index=True)
    except MeixnerError as e:
        st.error(f"{type(e).__name__}: {e}")

with laplace_tab:
    radius = laplace_radius(spec)
    st.write(f"Series radius R = {radius:.4g}")
    s = np.array([st.number_input(f"s{k + 1}", value=0.0, step=0.01, format="%.4f", key=f"s{k}")
                  for k in range(spec.dimension)])
    degree = st.slider("Taylor degree", 0, 10, 6, key="taylor_degree")
    try:
        st.metric("Taylor sum", f"{taylor_laplace(MomentTable(spec), s, degree):.12g}")
        result = classify(spec.alpha) if spec.dimension == 3 else None
        if isinstance(result, CaseI) and np.allclose(result.U, np.eye(3)):
            g = CanonicalGamma3(result.a)
            if in_domain(g.a, s):
                st.metric("Closed form", f"{laplace_closed_form(g, s):.12g}")
            else:
                st.warning("s is outside the Laplace domain")
    except MeixnerError as e:
        st.error(f"{type(e).__name__}: {e}")

with oracle_tab:
    chaos_degree = st.slider("Chaos degree N", 2, 5, settings.DEFAULT_CHAOS_DEGREE, key="chaos_degree")
    if st.button("Build operators"):
        try:
            tbl = MomentTable(spec)
            ops = build_operators(build_chaos_basis(tbl, chaos_degree), tbl)
            axioms = check_axioms(ops)
            st.dataframe(pd.DataFrame(sorted(axioms.residuals.items()), columns=["rule", "residual"]),
                         hide_index=True)
            fits = check_n_meixner(ops, 1)
            st.dataframe(pd.DataFrame([f.to_dict() for f in fits.fits]), hide_index=True)
        except MeixnerError as e:
            logger.error(f"Oracle failed: {e}")
            st.error(f"{type(e).__name__}: {e}")

with verify_tab:
    profile = st.selectbox("Profile", ["quick", "full"], key="profile")
    seed = st.number_input("Seed", min_value=0, value=settings.DEFAULT_SEED, step=1, key="seed")
    if st.button("Run verification"):
        with st.spinner("Running checks..."):
            st.session_state.verify_report = full_suite(spec, VerifyConfig.for_profile(profile, int(seed)))
    report = st.session_state.verify_report
    if report is not None:
        st.metric("Overall", "pass" if report.passed else "fail")
        table = pd.DataFrame([{
            "check": c.name,
            "passed": "skipped" if c.skipped else ("yes" if c.passed else "no"),
            "observed": c.observed,
            "tolerance": c.tolerance,
            "seconds": round(c.wall_time, 3),
            "reason": c.reason or "",
        } for c in report.ordered()])
        st.dataframe(table, hide_index=True)
