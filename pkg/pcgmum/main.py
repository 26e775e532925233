from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from starlette.exceptions import HTTPException as StarletteHTTPException
import logging

from pcgmum import __version__
from pcgmum.routers import mum
from pcgmum.settings import configure_logging, get_settings
from pcgmum.utils.errors import PcgError

configure_logging()

app = FastAPI(
    title="PCG MUM Toolkit",
    description="Mutually unbiased periodic coarse-grained measurements: bounds, construction and simulation",
    version=__version__,
    docs_url="/docs",
    redoc_url="/redoc"
)


# Global exception handlers
@app.exception_handler(PcgError)
async def domain_exception_handler(request: Request, exc: PcgError):
    logging.warning(f"Domain error for request {request.url}: {exc.code}: {exc.message}")
    return JSONResponse(status_code=422, content=exc.to_dict())


@app.exception_handler(Exception)
async def global_exception_handler(request: Request, exc: Exception):
    logging.error(f"Unhandled error for request {request.url}: {exc}", exc_info=True)
    return JSONResponse(
        status_code=500,
        content={"detail": f"Internal server error: {str(exc)}"},
    )


@app.exception_handler(StarletteHTTPException)
async def http_exception_handler(request: Request, exc: StarletteHTTPException):
    logging.warning(f"HTTP error {exc.status_code} for request {request.url}: {exc.detail}")
    return JSONResponse(
        status_code=exc.status_code,
        content={"detail": exc.detail},
    )


app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

app.include_router(mum.router)


@app.get("/")
async def root():
    return {
        "message": "PCG MUM Toolkit API",
        "version": __version__,
        "docs": "/docs"
    }


@app.get("/status")
async def status():
    settings = get_settings()
    return {
        "status": "running",
        "grid_size": settings.grid_size,
        "wavelength_nm": settings.wavelength_nm
    }
