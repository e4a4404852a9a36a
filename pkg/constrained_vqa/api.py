import logging
import os
import time

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .config import GRID_BETA, GRID_GAMMA
from .harness import GridResult, RunResult, RunSpec, run_grid, run_single

logger = logging.getLogger(__name__)

app = FastAPI(title="Constrained VQA API", version="1.0.0")

ALLOWED_ORIGINS = os.getenv("ALLOWED_ORIGINS", "*").split(",")
app.add_middleware(
    CORSMiddleware,
    allow_origins=ALLOWED_ORIGINS,
    allow_credentials=True,
    allow_methods=["POST", "GET"],
    allow_headers=["*"],
)

# REQUEST / RESPONSE MODELS

class RunResponse(BaseModel):
    success: bool
    result: RunResult | None = None
    total_time: float = 0.0
    error: str | None = None

class GridRequest(BaseModel):
    spec: RunSpec
    grid_gamma: int = GRID_GAMMA
    grid_beta: int = GRID_BETA
    with_traces: bool = False

class GridResponse(BaseModel):
    success: bool
    grid: GridResult | None = None
    total_time: float = 0.0
    error: str | None = None

# HEALTH CHECK

@app.get("/health")
def health_check():
    """API health check"""
    return {
        "status": "healthy",
        "service": "Constrained VQA API",
        "version": "1.0.0"
    }

# API 1: SINGLE RUN

@app.post("/run", response_model=RunResponse, response_model_exclude_none=True)
def run_endpoint(spec: RunSpec):
    """
    Run one optimization

    Args:
        spec: RunSpec

    Returns:
        {
            "success": bool,
            "result": RunResult,
            "total_time": float,
            "error": str (only on failure)
        }
    """
    start = time.time()
    try:
        result = run_single(spec)
        return RunResponse(success=True, result=result, total_time=time.time() - start)
    except Exception as e:
        logger.error(f"Run failed: {str(e)}")
        return RunResponse(success=False, error=str(e), total_time=time.time() - start)

# API 2: P=1 QAOA GRID SEARCH

@app.post("/grid", response_model=GridResponse, response_model_exclude_none=True)
def grid_endpoint(request: GridRequest):
    """
    Evaluate the p=1 QAOA lattice, optionally with optimizer traces

    Args:
        request: RunSpec plus grid size

    Returns:
        {
            "success": bool,
            "grid": GridResult,
            "total_time": float,
            "error": str (only on failure)
        }
    """
    start = time.time()
    try:
        grid = run_grid(request.spec, request.grid_gamma, request.grid_beta, request.with_traces)
        return GridResponse(success=True, grid=grid, total_time=time.time() - start)
    except Exception as e:
        logger.error(f"Grid search failed: {str(e)}")
        return GridResponse(success=False, error=str(e), total_time=time.time() - start)
