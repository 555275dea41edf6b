# Whole-Body Pose Toolkit - Main FastAPI Application
import logging

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from wholebody_kit.models.schemas import HealthCheckResponse
from wholebody_kit.routers import annotations, evaluation, poses
from wholebody_kit.utils.config import (
    API_TITLE,
    API_VERSION,
    API_DESCRIPTION,
    CORS_ORIGINS,
    CORS_ALLOW_CREDENTIALS,
    CORS_ALLOW_METHODS,
    CORS_ALLOW_HEADERS,
    configure_logging,
    get_settings,
)
from wholebody_kit.utils.exceptions import WholebodyError

# Configure logging
configure_logging(get_settings().log_level)
logger = logging.getLogger(__name__)

# Initialize FastAPI app
app = FastAPI(
    title=API_TITLE,
    version=API_VERSION,
    description=API_DESCRIPTION,
    docs_url="/docs",
    redoc_url="/redoc",
)

# Add CORS middleware
app.add_middleware(
    CORSMiddleware,
    allow_origins=CORS_ORIGINS,
    allow_credentials=CORS_ALLOW_CREDENTIALS,
    allow_methods=CORS_ALLOW_METHODS,
    allow_headers=CORS_ALLOW_HEADERS,
)

SERVICES = {
    "annotations": "Validation, statistics, part proposals, merging and rendering of COCO files",
    "poses": "Parametric pose NMS",
    "evaluation": "OKS AP / AR evaluation and keypoint schema",
}


# ============================================================================
# Health Check & Info Endpoints
# ============================================================================

@app.get("/")
async def root():
    """
    Root endpoint - API information and available services.
    """
    return {
        "status": "healthy",
        "api_name": API_TITLE,
        "version": API_VERSION,
        "description": API_DESCRIPTION,
        "services": SERVICES,
        "documentation": "/docs",
        "openapi_schema": "/openapi.json",
    }


@app.get("/health", response_model=HealthCheckResponse)
async def health_check():
    """
    Health check endpoint for monitoring.
    """
    return HealthCheckResponse(
        version=API_VERSION,
        services={name: "running" for name in SERVICES},
    )


@app.get("/info")
async def api_info():
    """
    Get detailed API information.
    """
    return {
        "api": API_TITLE,
        "version": API_VERSION,
        "description": API_DESCRIPTION,
        "base_url": "/",
        "docs": "/docs",
        "endpoints": {
            "annotations": {
                "validate": "POST /annotations/validate",
                "stats": "POST /annotations/stats",
                "propose": "POST /annotations/propose",
                "merge": "POST /annotations/merge",
                "render": "POST /annotations/render",
            },
            "poses": {
                "nms": "POST /poses/nms",
            },
            "evaluation": {
                "evaluate": "POST /evaluation/evaluate",
                "schema": "GET /evaluation/schema",
            },
        },
    }


# ============================================================================
# Include Routers
# ============================================================================

app.include_router(
    annotations.router,
    prefix="/annotations",
    tags=["Annotations"],
    responses={404: {"description": "Not found"}},
)

app.include_router(
    poses.router,
    prefix="/poses",
    tags=["Pose NMS"],
    responses={404: {"description": "Not found"}},
)

app.include_router(
    evaluation.router,
    prefix="/evaluation",
    tags=["Evaluation"],
    responses={404: {"description": "Not found"}},
)


# ============================================================================
# Error Handlers
# ============================================================================

@app.exception_handler(WholebodyError)
async def domain_exception_handler(request: Request, exc: WholebodyError):
    """
    Domain errors (bad input files, bad parameters) are client errors.
    """
    logger.warning("%s on %s: %s", exc.error_code, request.url.path, exc.message)
    return JSONResponse(status_code=400, content=exc.to_error_response())


@app.exception_handler(Exception)
async def global_exception_handler(request: Request, exc: Exception):
    """
    Global exception handler for unhandled exceptions.
    """
    logger.error(f"Unhandled exception: {str(exc)}", exc_info=True)
    return JSONResponse(
        status_code=500,
        content={
            "status": "error",
            "message": "Internal server error",
            "error_code": "INTERNAL_ERROR",
        },
    )


# ============================================================================
# Startup & Shutdown Events
# ============================================================================

@app.on_event("startup")
async def startup_event():
    """
    Actions to perform on server startup.
    """
    logger.info("=" * 70)
    logger.info(f"Starting {API_TITLE}")
    logger.info(f"   Version: {API_VERSION}")
    logger.info(f"   Workers per request: {get_settings().workers}")
    logger.info("=" * 70)
    for name in SERVICES:
        logger.info(f"{name} router loaded")
    logger.info("=" * 70)


@app.on_event("shutdown")
async def shutdown_event():
    """
    Actions to perform on server shutdown.
    """
    logger.info(f"Shutting down {API_TITLE}")


# ============================================================================
# Entry Point for Running Locally
# ============================================================================

if __name__ == "__main__":
    import uvicorn

    logger.info("Starting Uvicorn server...")
    uvicorn.run(
        "wholebody_kit.main:app",
        host="0.0.0.0",
        port=8000,
        reload=True,
        log_level="info",
    )
