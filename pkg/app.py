"""
Near-Field Channel Toolkit HTTP API
JSON endpoints for geometry, dictionary, complexity and estimation queries
"""

from flask import Flask, request, jsonify
from pydantic import ValidationError

from config import config, logger
from models import (
    ComplexityRequest, DictInfoRequest, EstimateRequest, InfoRequest,
    HealthCheckResponse, ErrorType
)
from services import method_registry
from services.analysis import analysis_service
from utils import error_handler, NearFieldError


class NearFieldApp:
    """Main HTTP application class"""

    def __init__(self):
        self.app = Flask(__name__)
        self._configure_app()
        self._register_routes()
        logger.info("Near-field toolkit API initialized")

    def _configure_app(self):
        """Configure Flask application"""
        self.app.json.sort_keys = False

        @self.app.after_request
        def after_request(response):
            response.headers.add('Access-Control-Allow-Origin', '*')
            response.headers.add('Access-Control-Allow-Headers', 'Content-Type,Authorization')
            response.headers.add('Access-Control-Allow-Methods', 'GET,POST,OPTIONS')
            return response

    def _handle(self, model, handler, name: str):
        """Parse the JSON body into `model`, run `handler` and map failures onto error responses"""
        try:
            data = request.get_json(silent=True)
            if not data:
                return jsonify(error_handler.create_error_response(
                    "Missing request body",
                    ErrorType.INPUT_ERROR
                ).model_dump()), 400

            response = handler(model(**data))
            return jsonify(response.model_dump())

        except ValidationError as e:
            logger.warning(f"{name} validation error: {e}")
            return jsonify(error_handler.create_error_response(
                f"Invalid request data: {str(e)}",
                ErrorType.INPUT_ERROR
            ).model_dump()), 400
        except NearFieldError as e:
            logger.warning(f"{name} rejected: {e}")
            status = 400 if e.error_type == ErrorType.CONFIG_ERROR else 500
            return jsonify(error_handler.create_error_response(
                str(e),
                e.error_type
            ).model_dump()), status
        except Exception as e:
            error_handler.log_error(logger, e, f"{name} endpoint error")
            return jsonify(error_handler.create_error_response(
                f"{name} processing failed",
                ErrorType.GENERAL_ERROR
            ).model_dump()), 500

    def _register_routes(self):
        """Register all application routes"""

        @self.app.route('/api/health')
        def health_check():
            """Health check endpoint with configuration status"""
            try:
                problems = config.get_config_problems()
                response = HealthCheckResponse(
                    status="healthy" if not problems else "degraded",
                    methods=[tag.value for tag in method_registry.tags],
                    config_problems=problems
                )
                return jsonify(response.model_dump())

            except Exception as e:
                logger.error(f"Health check failed: {e}")
                return jsonify({
                    "status": "unhealthy",
                    "error": str(e)
                }), 500

        @self.app.route('/api/info', methods=['POST'])
        def info():
            """Geometry and region boundaries"""
            return self._handle(InfoRequest, analysis_service.describe_geometry, "Info")

        @self.app.route('/api/dict-info', methods=['POST'])
        def dict_info():
            """Dictionary size, memory and mutual coherence"""
            return self._handle(DictInfoRequest, analysis_service.describe_dictionary, "Dictionary info")

        @self.app.route('/api/complexity', methods=['POST'])
        def complexity():
            """Search-space accounting"""
            return self._handle(ComplexityRequest, analysis_service.complexity, "Complexity")

        @self.app.route('/api/estimate', methods=['POST'])
        def estimate():
            """Simulate one seeded scene and run the requested methods"""
            return self._handle(EstimateRequest, analysis_service.estimate, "Estimate")

    def run(self):
        """Run the Flask application"""
        logger.info(f"Serving near-field toolkit API at http://{config.HOST}:{config.PORT}")

        problems = config.get_config_problems()
        if problems:
            logger.warning(f"Invalid settings: {', '.join(problems)}")

        self.app.run(
            debug=config.DEBUG,
            host=config.HOST,
            port=config.PORT
        )


# Create application instance
app_instance = NearFieldApp()

# Export Flask app for WSGI servers
app = app_instance.app


if __name__ == '__main__':
    app_instance.run()
