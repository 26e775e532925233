from fastapi import APIRouter, HTTPException
import logging

from pcgmum.models.schemas import (
    ConstructRequest,
    EntropyTables,
    SearchRequest,
    SimulateRequest,
    SweepRequest,
    SweepResult,
    TablesRequest,
    VerificationReport,
    VerifyRequest,
)
from pcgmum.services import analysis, cvsim
from pcgmum.services.mum_config import (
    build_symmetric,
    from_directions,
    round_to_pixels,
    to_physical,
    verify_config,
)
from pcgmum.services.numtheory import classify_dimension, find_max_family, r_max, smallest_prime_factor
from pcgmum.settings import get_settings
from pcgmum.utils.errors import PcgError

router = APIRouter(prefix="/api/v1", tags=["mum"])

# CPU-bound handlers are plain def; FastAPI runs them in its threadpool.


@router.get("/rmax/{d}")
def get_rmax(d: int):
    bound = r_max(d)
    dimension = classify_dimension(d)
    return {
        "d": d,
        "smallest_prime_factor": smallest_prime_factor(d),
        "r_max": bound,
        "kind": dimension["kind"],
        "behaviour": dimension["behaviour"],
    }


@router.post("/search")
def search_family(request: SearchRequest):
    logging.info(f"Family search request d={request.d} m_bound={request.m_bound}")
    witness = find_max_family(
        request.d,
        request.m_bound,
        pruned=request.pruned,
        max_nodes=get_settings().search_max_nodes
    )
    return {
        "d": request.d,
        "m_bound": request.m_bound,
        "r_max": r_max(request.d),
        "r_found": witness.R,
        "nodes": witness.nodes,
        "matrix": witness.matrix.m if witness.matrix else None,
    }


@router.post("/construct")
def construct_config(request: ConstructRequest):
    config = build_symmetric(request.d, request.Q, request.R, request.m_col0)
    payload = config.model_dump(mode="json", by_alias=True)
    payload["periods_px"] = to_physical(config, request.scale)
    if request.round_pixels:
        pixels, report = round_to_pixels(config, request.scale)
        payload["pixels"] = pixels
        payload["rounded_report"] = report.model_dump(mode="json", by_alias=True)
    return payload


@router.post("/verify", response_model=VerificationReport, response_model_by_alias=True)
def verify(request: VerifyRequest):
    config = request.config
    if config is None:
        directions = request.directions
        config = from_directions(directions.d, directions.angles, directions.periods, directions.offsets)
    return verify_config(config, rel_tol=request.rel_tol)


@router.post("/simulate")
def simulate(request: SimulateRequest):
    try:
        config = request.config
        grid = cvsim.default_grid(request.grid_size)
        prepared = cvsim.prepare(cvsim.gaussian_state(grid, request.beam_width), config, request.j, request.u)
        dist = cvsim.measure_probs(prepared, config, request.j, request.k)
        if request.noise_fraction:
            dist = analysis.apply_background(dist, analysis.leak_to_mixing(request.noise_fraction, config.d))
        payload = dist.model_dump(mode="json", by_alias=True)
        payload.update(entropy_bits=analysis.shannon_entropy(dist), kl_bits=analysis.kl_uniform(dist))
        if request.convergence_sizes:
            deviations = analysis.convergence_study(
                config, request.j, request.k, sizes=request.convergence_sizes,
                beam_width=request.beam_width, u=request.u
            )
            payload["convergence"] = [
                {"grid_size": n, "max_deviation": deviation} for n, deviation in deviations.items()
            ]
        return payload

    except PcgError:
        raise
    except Exception as e:
        logging.error(f"Simulation failed: {str(e)}", exc_info=True)
        raise HTTPException(status_code=500, detail="Simulation failed")


@router.post("/tables", response_model=EntropyTables, response_model_by_alias=True)
def tables(request: TablesRequest):
    return analysis.reproduce_tables(
        request.config,
        noise_fraction=request.noise_fraction,
        grid=cvsim.default_grid(request.grid_size),
        beam_width=request.beam_width,
        sensitivity=request.sensitivity
    )


@router.post("/sweep", response_model=SweepResult, response_model_by_alias=True)
def sweep(request: SweepRequest):
    return analysis.entropy_sweep(
        request.config,
        request.j,
        request.k,
        u=request.u,
        start_px=request.start_px,
        stop_px=request.stop_px,
        step_px=request.step_px,
        scale=request.scale,
        grid=cvsim.default_grid(request.grid_size),
        beam_width=request.beam_width
    )


@router.get("/health")
async def health_check():
    """Health check endpoint"""
    return {"status": "healthy", "message": "PCG MUM toolkit is running"}
